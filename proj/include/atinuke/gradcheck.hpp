#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atinuke/model.hpp"

namespace atinuke {

/// Central finite differences (h = 1e-5) against the tape gradients of the
/// full-model cross-entropy loss on a small fixed config, sampling at least
/// min_coords parameter coordinates across all groups.
struct GradCheckReport {
    struct Group {
        std::string name;
        std::size_t coords_checked = 0;
        double worst_rel_err = 0.0;
        std::string worst_coord;  // "name[flat_index]"
    };
    std::vector<Group> groups;
    std::size_t coords_checked = 0;
    double worst_rel_err = 0.0;
    std::string worst_coord;
};

/// |a - f| / max(|a|, |f|, 1e-8)
double relative_error(double analytic, double numeric);

/// The layers=1, dim=4, seq=3, vocab=5 verification model.
ModelConfig gradcheck_config();

GradCheckReport run_gradcheck(std::uint64_t seed, std::size_t min_coords = 200);

}  // namespace atinuke
