/*
 * Copyright 2026 The cstrain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cstrain {

enum class ErrorCode {
    UnknownGroup,
    LengthMismatch,
    DimensionMismatch,
    ShapeMismatch,
    ShapeError,
    NonFiniteLoss,
    NonPositiveRho,
    InnerSolveDiverged,
    InvalidOrder,
    EmptyInput,
    BadMagic,
    CountMismatch,
    TruncatedFile,
    IoError,
    ParseError,
    ValidationError,
    InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnknownGroup: return "UnknownGroup";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::NonPositiveRho: return "NonPositiveRho";
        case ErrorCode::InnerSolveDiverged: return "InnerSolveDiverged";
        case ErrorCode::InvalidOrder: return "InvalidOrder";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorCode kinds.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace cstrain
