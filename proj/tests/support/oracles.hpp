#pragma once

// Test-only reference computations, written independently of the library code
// paths they check.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace oracle {

/// Hartmann 3/6 straight from the published tables (P stored as integers x 1e-4).
inline double hartmann(const std::vector<double>& x) {
    static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static const double a3[4][3] = {{3, 10, 30}, {0.1, 10, 35}, {3, 10, 30}, {0.1, 10, 35}};
    static const int p3[4][3] = {{3689, 1170, 2673}, {4699, 4387, 7470}, {1091, 8732, 5547}, {381, 5743, 8828}};
    static const double a6[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                    {0.05, 10, 17, 0.1, 8, 14},
                                    {3, 3.5, 1.7, 10, 17, 8},
                                    {17, 8, 0.05, 10, 0.1, 14}};
    static const int p6[4][6] = {{1312, 1696, 5569, 124, 8283, 5886},
                                 {2329, 4135, 8307, 3736, 1004, 9991},
                                 {2348, 1451, 3522, 2883, 3047, 6650},
                                 {4047, 8828, 8732, 5743, 1091, 381}};
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
        double e = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double a = x.size() == 3 ? a3[i][j] : a6[i][j];
            const double p = (x.size() == 3 ? p3[i][j] : p6[i][j]) * 1e-4;
            e -= a * std::pow(x[j] - p, 2);
        }
        total -= alpha[i] * std::exp(e);
    }
    return total;
}

/// Index of argmin over j != i, lowest index on ties; i itself when n == 1.
inline std::size_t feedback_partner(const std::vector<double>& responses, std::size_t i) {
    if (responses.size() == 1) return i;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < responses.size(); ++j) {
        if (j != i && (best == std::numeric_limits<std::size_t>::max() || responses[j] < best_value)) {
            best = j;
            best_value = responses[j];
        }
    }
    return best;
}

}  // namespace oracle
