// Copyright 2026 The cfrenew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFRENEW_CFRENEW_HPP
#define CFRENEW_CFRENEW_HPP

#include "cfrenew/cf_core.hpp"
#include "cfrenew/errors.hpp"
#include "cfrenew/gauss_system.hpp"
#include "cfrenew/hp_real.hpp"
#include "cfrenew/limit_law.hpp"
#include "cfrenew/mixing_diag.hpp"
#include "cfrenew/parallel.hpp"
#include "cfrenew/quadrature.hpp"
#include "cfrenew/rng.hpp"
#include "cfrenew/special_flow.hpp"
#include "cfrenew/table_io.hpp"

#endif  // CFRENEW_CFRENEW_HPP
