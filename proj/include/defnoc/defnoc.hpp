/*
 * Copyright 2026 The defnoc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "defnoc/config.hpp"
#include "defnoc/experiment.hpp"
#include "defnoc/mesh_network.hpp"
#include "defnoc/metrics.hpp"
#include "defnoc/reassembly.hpp"
#include "defnoc/ring_network.hpp"
#include "defnoc/ring_topology.hpp"
#include "defnoc/rng.hpp"
#include "defnoc/simulator.hpp"
#include "defnoc/traffic.hpp"
#include "defnoc/types.hpp"
