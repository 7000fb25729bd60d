/*
 * Copyright 2026 The drfvi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "drfvi/common.hpp"
#include "drfvi/csv.hpp"
#include "drfvi/dataset.hpp"
#include "drfvi/evaluation.hpp"
#include "drfvi/forest.hpp"
#include "drfvi/generators.hpp"
#include "drfvi/importance.hpp"
#include "drfvi/io.hpp"
#include "drfvi/kernel.hpp"
#include "drfvi/projection.hpp"
