#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stmcirc/mat3.hpp"

namespace stmcirc {

/// Full 3x3 scattering data over a frequency grid.
///
/// Convention: e^{+j w t} time dependence; excitation at port j fills column j,
/// i.e. matrix(i,j) = S_ij = (wave out of port i) / (wave into port j).
struct SParameterSet {
    std::vector<double> frequencies;  // rad/s, strictly increasing
    std::vector<Mat3> matrices;       // one per grid point

    std::size_t size() const { return frequencies.size(); }

    void validate() const {
        if (frequencies.size() != matrices.size())
            throw std::invalid_argument("SParameterSet: grid/matrix size mismatch");
        for (std::size_t i = 1; i < frequencies.size(); ++i)
            if (!(frequencies[i] > frequencies[i - 1]))
                throw std::invalid_argument("SParameterSet: grid must be strictly increasing");
    }
};

inline double mag_db(cplx s) { return -20.0 * std::log10(std::max(std::abs(s), 1e-300)); }

struct MetricThresholds {
    double ix_min_db = 20.0;
    double rl_min_db = 20.0;
    double il_max_db = 3.0;
};

struct MetricSet {
    double il_db = 0.0;
    double rl_db = 0.0;
    double ix_db = 0.0;
    double bw_fractional = 0.0;
    double center_frequency = 0.0;  // rad/s
    bool bw_defined = false;
};

/// Scalar metrics for excitation at port 1: IL=-20log|S21|, RL=-20log|S11|,
/// IX=-20log|S31|, evaluated at the center frequency (argmax IX by default).
/// BW is the widest contiguous grid interval containing the center on which
/// all three thresholds hold; when the center itself fails them the bandwidth
/// is reported as undefined.
inline MetricSet metrics(const SParameterSet& sp, const MetricThresholds& th = {},
                         std::optional<double> center_override = std::nullopt) {
    sp.validate();
    if (sp.size() == 0) throw std::invalid_argument("metrics: empty grid");

    const std::size_t n = sp.size();
    std::vector<double> il(n), rl(n), ix(n);
    for (std::size_t i = 0; i < n; ++i) {
        rl[i] = mag_db(sp.matrices[i](0, 0));
        il[i] = mag_db(sp.matrices[i](1, 0));
        ix[i] = mag_db(sp.matrices[i](2, 0));
    }

    std::size_t ic = 0;
    if (center_override) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(sp.frequencies[i] - *center_override);
            if (d < best) { best = d; ic = i; }
        }
    } else {
        ic = static_cast<std::size_t>(std::max_element(ix.begin(), ix.end()) - ix.begin());
    }

    MetricSet m;
    m.center_frequency = sp.frequencies[ic];
    m.il_db = il[ic];
    m.rl_db = rl[ic];
    m.ix_db = ix[ic];

    auto pass = [&](std::size_t i) {
        return ix[i] >= th.ix_min_db && rl[i] >= th.rl_min_db && il[i] <= th.il_max_db;
    };
    if (pass(ic)) {
        std::size_t a = ic, b = ic;
        while (a > 0 && pass(a - 1)) --a;
        while (b + 1 < n && pass(b + 1)) ++b;
        m.bw_defined = true;
        m.bw_fractional = (sp.frequencies[b] - sp.frequencies[a]) / m.center_frequency;
    }
    return m;
}

/// S-matrix of the ideal clockwise-biased circulator (1->2->3->1).
inline Mat3 ideal_smatrix() {
    Mat3 s;
    s(0, 2) = 1.0;
    s(1, 0) = 1.0;
    s(2, 1) = 1.0;
    return s;
}

}  // namespace stmcirc
