// SPDX-License-Identifier: Apache-2.0
//
// fwl: full-wavefield lidar simulation and reconstruction toolkit
// Copyright (C) 2026 The fwl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Umbrella header for the whole toolkit.

#include "fwl/channel.hpp"
#include "fwl/core.hpp"
#include "fwl/errors.hpp"
#include "fwl/homodyne.hpp"
#include "fwl/io.hpp"
#include "fwl/metrics.hpp"
#include "fwl/modulation.hpp"
#include "fwl/pipeline.hpp"
#include "fwl/reconstruction/extract.hpp"
#include "fwl/reconstruction/field.hpp"
#include "fwl/reconstruction/matched_filter.hpp"
#include "fwl/reconstruction/objective.hpp"
#include "fwl/reconstruction/solver.hpp"
#include "fwl/rng.hpp"
#include "fwl/scenes.hpp"
