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

#include "cstrain/constraints.hpp"
#include "cstrain/data.hpp"
#include "cstrain/error.hpp"
#include "cstrain/methods/admm.hpp"
#include "cstrain/methods/alm.hpp"
#include "cstrain/methods/fp.hpp"
#include "cstrain/methods/multipliers.hpp"
#include "cstrain/methods/record.hpp"
#include "cstrain/methods/sal.hpp"
#include "cstrain/metrics.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/params.hpp"
#include "cstrain/solvers.hpp"
