#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mixsum/core.hpp"
#include "mixsum/evaluation.hpp"
#include "mixsum/io.hpp"
#include "mixsum/measures.hpp"
#include "mixsum/old_faithful_data.hpp"

namespace mixsum {

/// 272 x 2 matrix: eruption duration and waiting time, both in minutes.
inline DataMatrix load_old_faithful() {
    if (fnv1a64(data::kOldFaithfulCsv) != data::kOldFaithfulChecksum)
        throw NumericalError("load_old_faithful: bundled data failed its checksum");
    auto m = parse_data_csv(data::kOldFaithfulCsv, "old_faithful.csv");
    if (m.n() != 272 || m.dim() != 2) throw NumericalError("load_old_faithful: bundled data has the wrong shape");
    return m;
}

/// Small inputs with known answers, shared by tests and the CLI self-check.
struct Fixture {
    std::string name;
    std::vector<MixingMeasure> measures;
    std::vector<LabelVector> labels;
    double expected;
    std::string origin;  // how `expected` was obtained
};

inline std::vector<Fixture> fixtures() {
    auto atom1d = [](double m, double v) { return GaussianAtom(Vector::Constant(1, m), SpdMatrix(Matrix::Constant(1, 1, v))); };
    std::vector<Fixture> out;
    out.push_back({"binder_crossed", {}, {{1, 1, 2, 2}, {1, 2, 1, 2}}, 4.0 / 6.0, "count of the 6 pairs"});
    out.push_back({"vi_split", {}, {{1, 2}, {1, 1}}, std::numbers::ln2, "H(z1) = ln 2, H(z2) = I = 0"});
    out.push_back({"omari_crossed", {}, {{1, 1, 2, 2}, {1, 2, 1, 2}}, 1.5, "contingency table: index 0, expected 1, max 2"});
    out.push_back({"gaussian_w2_1d",
                   {MixingMeasure({1.0}, {atom1d(0.0, 1.0)}), MixingMeasure({1.0}, {atom1d(3.0, 4.0)})},
                   {},
                   10.0,
                   "(0 - 3)^2 + (1 - 2)^2"});
    out.push_back({"four_component_truth", {four_component_truth()}, {}, 0.25, "equal weights"});
    return out;
}

}  // namespace mixsum
