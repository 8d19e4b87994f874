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

// Thin RAII layer over FFTW3. Plans are created once per (size, direction)
// under a mutex and executed lock-free on FFTW-aligned buffers, which is
// FFTW's documented thread-safe usage. FFTW_ESTIMATE plans are
// deterministic, so repeated runs give bit-identical transforms.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <utility>
#include <vector>

#include "fwl/core.hpp"

namespace fwl::fft {

template <typename T>
struct fftw_allocator {
    using value_type = T;
    fftw_allocator() = default;
    template <typename U>
    fftw_allocator(const fftw_allocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        if (n == 0) return nullptr;
        void* p = fftw_malloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

    template <typename U>
    bool operator==(const fftw_allocator<U>&) const noexcept { return true; }
};

using buffer = std::vector<cplx, fftw_allocator<cplx>>;

/// Smallest of 2^a, 3*2^a, 5*2^a that is >= n.
inline std::size_t good_size(std::size_t n) {
    std::size_t best = 1;
    while (best < n) best <<= 1;
    for (std::size_t f : {3u, 5u}) {
        std::size_t c = f;
        while (c < n) c <<= 1;
        if (c < best) best = c;
    }
    return best;
}

enum class Direction { Forward, Inverse };

namespace detail {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

inline fftw_plan plan_for(std::size_t n, Direction dir) {
    static std::map<std::pair<std::size_t, int>, PlanPtr> cache;
    std::lock_guard lock(planner_mutex());
    const auto key = std::make_pair(n, dir == Direction::Forward ? 0 : 1);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second.get();

    buffer scratch(n);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), data, data,
                                   dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
    return cache.emplace(key, PlanPtr(p)).first->second.get();
}

}  // namespace detail

/// In-place unnormalized forward transform.
inline void forward(buffer& x) {
    if (x.empty()) return;
    auto* d = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(detail::plan_for(x.size(), Direction::Forward), d, d);
}

/// In-place inverse transform, scaled by 1/n.
inline void inverse(buffer& x) {
    if (x.empty()) return;
    auto* d = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(detail::plan_for(x.size(), Direction::Inverse), d, d);
    const double scale = 1.0 / static_cast<double>(x.size());
    for (auto& v : x) v *= scale;
}

}  // namespace fwl::fft
