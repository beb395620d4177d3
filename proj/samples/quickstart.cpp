// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

// Runs the flywheel on the 4x4 object grid and then expands it with the
// action factors, printing per-iteration progress.

#include <iostream>

#include "facil/facil.hpp"

int main() {
    facil::OracleParams params;
    params.seed = 7;
    facil::FlywheelConfig cfg;

    const auto stages = std::vector<facil::FactorSpace>{facil::preset_space("pnp_object"),
                                                        facil::preset_space("pnp_action")};
    for (const auto& h : facil::sequential_expansion(stages, params, cfg)) {
        std::cout << "stage " << h.stage << (h.converged ? " converged" : " did not converge") << '\n';
        for (const auto& it : h.iterations) {
            std::cout << "  iter " << it.iteration << ": demos=" << it.total_before << " support=" << it.support_before
                      << " rate=" << it.overall() << '\n';
        }
    }
}
