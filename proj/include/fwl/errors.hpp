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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fwl {

/// Invalid configuration value or inconsistent parameters.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A physical quantity outside the representable range (depth, delay, ...).
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Array lengths or grid dimensions that do not line up.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A delay that cannot be expressed on the sample grid of a trace.
struct ResolutionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Scene geometry that cannot be realized (out of range, too fast, ...).
struct SceneError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Every candidate bin was masked during extraction.
struct NoSurfaceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem or archive format failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A metric that cannot be computed from the given data (too few valid
/// pixels for a plane fit, no moving pixels for velocity error, ...).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite objective during optimization.
class SolverError : public std::runtime_error {
public:
    SolverError(std::size_t iteration, std::size_t pixel, const std::string& what)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ", pixel " +
                             std::to_string(pixel) + ")"),
          iteration_(iteration),
          pixel_(pixel) {}

    std::size_t iteration() const noexcept { return iteration_; }
    std::size_t pixel() const noexcept { return pixel_; }

private:
    std::size_t iteration_;
    std::size_t pixel_;
};

}  // namespace fwl
