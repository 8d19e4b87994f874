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
#include <vector>

#include "fwl/core.hpp"
#include "fwl/fft.hpp"

namespace fwl {

enum class CorrelationKind {
    SameChannel,  // naive: sum_p |sum_n conj(X_{n-d}[p]) Y_n[p]|^2
    AllPairs,     // generalized: sum_{p,q} |sum_n conj(X_{n-d}[p]) Y_n[q]|^2
};

struct MatchedFilterResult {
    int delta_star = 0;
    std::vector<double> profile;  // score per lag 0..delta_max
};

/// Lag-domain correlator for one transmit sequence, reused across pixels.
class MatchedFilter {
public:
    MatchedFilter(const DualPolSequence& tx, int delta_max) : n_(tx.size()), delta_max_(delta_max) {
        if (n_ == 0) throw ShapeError("matched filter needs a nonempty transmit sequence");
        if (delta_max < 0 || static_cast<std::size_t>(delta_max) >= n_)
            throw ShapeError("delta_max must be smaller than the sequence length");
        len_ = fft::good_size(n_ + static_cast<std::size_t>(delta_max) + 1);
        for (int p = 0; p < 2; ++p) {
            fx_[p].assign(len_, cplx(0.0));
            for (std::size_t i = 0; i < n_; ++i) fx_[p][i] = tx[i](p);
            fft::forward(fx_[p]);
        }
    }

    int delta_max() const { return delta_max_; }

    /// Score profile over lags 0..delta_max.
    std::vector<double> profile(const DualPolSequence& rx, CorrelationKind kind) const {
        if (rx.size() != n_) throw ShapeError("rx length differs from the transmit length");
        fft::buffer fy[2], c(len_);
        for (int q = 0; q < 2; ++q) {
            fy[q].assign(len_, cplx(0.0));
            for (std::size_t i = 0; i < n_; ++i) fy[q][i] = rx[i](q);
            fft::forward(fy[q]);
        }
        std::vector<double> score(static_cast<std::size_t>(delta_max_) + 1, 0.0);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
                if (kind == CorrelationKind::SameChannel && p != q) continue;
                for (std::size_t i = 0; i < len_; ++i) c[i] = fy[q][i] * std::conj(fx_[p][i]);
                fft::inverse(c);
                for (std::size_t d = 0; d < score.size(); ++d) score[d] += std::norm(c[d]);
            }
        return score;
    }

    MatchedFilterResult run(const DualPolSequence& rx, CorrelationKind kind) const {
        MatchedFilterResult r;
        r.profile = profile(rx, kind);
        r.delta_star = argmax_lag(r.profile);
        return r;
    }

    /// First index of the maximum, so ties go to the smaller lag.
    static int argmax_lag(const std::vector<double>& profile) {
        std::size_t best = 0;
        for (std::size_t d = 1; d < profile.size(); ++d)
            if (profile[d] > profile[best]) best = d;
        return static_cast<int>(best);
    }

private:
    std::size_t n_ = 0;
    int delta_max_ = 0;
    std::size_t len_ = 0;
    fft::buffer fx_[2];
};

inline MatchedFilterResult matched_filter_naive(const DualPolSequence& tx, const DualPolSequence& rx, int delta_max) {
    if (tx.empty() || rx.empty()) throw ShapeError("matched filter on an empty sequence");
    return MatchedFilter(tx, delta_max).run(rx, CorrelationKind::SameChannel);
}

inline MatchedFilterResult matched_filter_generalized(const DualPolSequence& tx, const DualPolSequence& rx,
                                                      int delta_max) {
    if (tx.empty() || rx.empty()) throw ShapeError("matched filter on an empty sequence");
    return MatchedFilter(tx, delta_max).run(rx, CorrelationKind::AllPairs);
}

}  // namespace fwl
