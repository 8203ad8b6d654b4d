#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "decohere/model.hpp"

namespace decohere {

struct ScalingRequest {
    std::vector<int> sizes;
    std::uint64_t seed = 0;
    double t = 10.0;
    int samples = 200;
    SamplingSpec dist{};
    /// Coupling mean, as a multiple of g, used for the diagonal-mean fit when dist.v_shift is zero.
    double mean_shift_fraction = 0.5;
};

struct ScalingRow {
    int num_sites = 0;
    double diag_mean = 0.0;
    double diag_std = 0.0;
    double offdiag_std = 0.0;
    /// Mean of lambda with couplings shifted to a nonzero mean (same draws).
    double diag_mean_shifted = 0.0;
};

struct SlopeFit {
    bool valid = false;
    double slope = 0.0;
    double intercept = 0.0;
    double ci95 = 0.0;  ///< half-width, 1.96 standard errors
};

struct ScalingSummary {
    std::vector<ScalingRow> rows;
    double shifted_v_mean = 0.0;
    SlopeFit offdiag_std_slope;
    SlopeFit diag_mean_slope;  ///< fitted on diag_mean_shifted
    SlopeFit diag_std_slope;
};

/// Least squares fit of log y against log x. Invalid if any y <= 0 or fewer than 3 points.
SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Statistics of the branch diagonal element lambda and of the sum of its
/// single-flip off-diagonal elements over random models and branches, using
/// closed forms only: O(M * samples) per size, no 2^M objects.
/// Throws std::invalid_argument for fewer than 3 sizes or any size < 8.
ScalingSummary scaling_stats(const ScalingRequest& request);

/// Columns M, diag_mean, diag_std, offdiag_std.
void write_scaling_csv(std::ostream& os, const ScalingSummary& summary);
nlohmann::json scaling_json(const ScalingSummary& summary);

}  // namespace decohere
