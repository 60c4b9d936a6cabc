#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixsum/core.hpp"
#include "mixsum/measures.hpp"

namespace mixsum {

enum class PartitionLoss { binder, vi, omari };

inline std::string to_string(PartitionLoss l) {
    switch (l) {
        case PartitionLoss::binder: return "binder";
        case PartitionLoss::vi: return "vi";
        case PartitionLoss::omari: return "omari";
    }
    return "?";
}

inline PartitionLoss parse_partition_loss(std::string_view s) {
    if (s == "binder") return PartitionLoss::binder;
    if (s == "vi") return PartitionLoss::vi;
    if (s == "omari") return PartitionLoss::omari;
    throw ValidationError("unknown partition loss '" + std::string(s) + "' (expected binder, vi or omari)");
}

/// Labels renumbered to 0..k-1 in increasing order of the original value.
struct CompactLabels {
    std::vector<int> ids;
    int clusters = 0;

    explicit CompactLabels(std::span<const int> labels) : ids(labels.size()) {
        std::vector<int> seen;  // sorted distinct labels
        std::vector<int> code;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            auto it = std::lower_bound(seen.begin(), seen.end(), labels[i]);
            auto pos = static_cast<std::size_t>(it - seen.begin());
            if (it == seen.end() || *it != labels[i]) {
                seen.insert(it, labels[i]);
                code.insert(code.begin() + static_cast<std::ptrdiff_t>(pos), clusters++);
            }
            ids[i] = code[pos];
        }
    }

    std::size_t size() const { return ids.size(); }
};

/// Counts n_kl = #{i : z1_i = k, z2_i = l} over compacted labels.
class ContingencyTable {
public:
    ContingencyTable(const CompactLabels& z1, const CompactLabels& z2)
        : rows_(z1.clusters), cols_(z2.clusters), n_(static_cast<long>(z1.size())) {
        if (z1.size() != z2.size())
            throw ValidationError("ContingencyTable: label vectors have lengths " + std::to_string(z1.size()) + " and " +
                                  std::to_string(z2.size()));
        counts_.assign(static_cast<std::size_t>(rows_) * cols_, 0);
        row_sums_.assign(rows_, 0);
        col_sums_.assign(cols_, 0);
        for (std::size_t i = 0; i < z1.size(); ++i) {
            ++counts_[static_cast<std::size_t>(z1.ids[i]) * cols_ + z2.ids[i]];
            ++row_sums_[z1.ids[i]];
            ++col_sums_[z2.ids[i]];
        }
    }

    ContingencyTable(std::span<const int> z1, std::span<const int> z2)
        : ContingencyTable(CompactLabels(z1), CompactLabels(z2)) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    long n() const { return n_; }
    long count(int k, int l) const { return counts_[static_cast<std::size_t>(k) * cols_ + l]; }
    long row_sum(int k) const { return row_sums_[k]; }
    long col_sum(int l) const { return col_sums_[l]; }

private:
    int rows_, cols_;
    long n_;
    std::vector<long> counts_, row_sums_, col_sums_;
};

namespace detail {

inline double pairs(long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }

struct PairCounts {
    double together_both = 0, together_first = 0, together_second = 0, total = 0;
};

inline PairCounts pair_counts(const ContingencyTable& t) {
    PairCounts c;
    for (int k = 0; k < t.rows(); ++k) c.together_first += pairs(t.row_sum(k));
    for (int l = 0; l < t.cols(); ++l) c.together_second += pairs(t.col_sum(l));
    for (int k = 0; k < t.rows(); ++k)
        for (int l = 0; l < t.cols(); ++l) c.together_both += pairs(t.count(k, l));
    c.total = pairs(t.n());
    return c;
}

}  // namespace detail

/// Fraction of pairs clustered together in exactly one partition.
inline double binder_loss(const ContingencyTable& t) {
    if (t.n() < 2) throw ValidationError("binder_loss: need at least two items");
    auto c = detail::pair_counts(t);
    return (c.together_first + c.together_second - 2.0 * c.together_both) / c.total;
}

/// Variation of information H(z1) + H(z2) - 2 I(z1, z2), in nats.
inline double vi_loss(const ContingencyTable& t) {
    if (t.n() < 1) throw ValidationError("vi_loss: empty label vectors");
    const double n = static_cast<double>(t.n());
    double vi = 0.0;
    for (int k = 0; k < t.rows(); ++k)
        for (int l = 0; l < t.cols(); ++l) {
            long c = t.count(k, l);
            if (c == 0) continue;
            double p = c / n;
            vi -= p * (std::log(c / static_cast<double>(t.row_sum(k))) + std::log(c / static_cast<double>(t.col_sum(l))));
        }
    return std::max(vi, 0.0);
}

/// One minus the adjusted Rand index. Not clamped: ARI may be negative.
inline double omari_loss(const ContingencyTable& t) {
    if (t.n() < 2) throw ValidationError("omari_loss: need at least two items");
    auto c = detail::pair_counts(t);
    double expected = c.together_first * c.together_second / c.total;
    double max_index = 0.5 * (c.together_first + c.together_second);
    double denom = max_index - expected;
    // Both partitions all-singletons or both one-block: they are equal.
    if (denom == 0.0) return 0.0;
    return 1.0 - (c.together_both - expected) / denom;
}

inline double partition_loss(PartitionLoss loss, const ContingencyTable& t) {
    switch (loss) {
        case PartitionLoss::binder: return binder_loss(t);
        case PartitionLoss::vi: return vi_loss(t);
        case PartitionLoss::omari: return omari_loss(t);
    }
    return 0.0;
}

inline double binder_loss(std::span<const int> z1, std::span<const int> z2) { return binder_loss(ContingencyTable(z1, z2)); }
inline double vi_loss(std::span<const int> z1, std::span<const int> z2) { return vi_loss(ContingencyTable(z1, z2)); }
inline double omari_loss(std::span<const int> z1, std::span<const int> z2) { return omari_loss(ContingencyTable(z1, z2)); }

inline double partition_loss(PartitionLoss loss, std::span<const int> z1, std::span<const int> z2) {
    return partition_loss(loss, ContingencyTable(z1, z2));
}

/// Posterior expected loss of `candidate`: mean of loss(sample, candidate).
inline double expected_partition_loss(PartitionLoss loss, std::span<const int> candidate,
                                      const std::vector<LabelVector>& samples) {
    if (samples.empty()) throw ValidationError("expected_partition_loss: no samples");
    CompactLabels c(candidate);
    double total = 0.0;
    for (const auto& s : samples) total += partition_loss(loss, ContingencyTable(CompactLabels(s), c));
    return total / static_cast<double>(samples.size());
}

struct PartitionSummary {
    std::size_t index;
    LabelVector labels;
    std::vector<double> expected_losses;  // per candidate sample
};

/// Best visited sample under the posterior expected loss; ties go to the
/// lowest index.
inline PartitionSummary greedy_partition_summary(PartitionLoss loss, const std::vector<LabelVector>& samples,
                                                 unsigned threads = 0) {
    if (samples.empty()) throw ValidationError("greedy_partition_summary: no samples");
    const std::size_t m = samples.size();
    for (const auto& s : samples)
        if (s.size() != samples.front().size())
            throw ValidationError("greedy_partition_summary: samples of different length");
    std::vector<CompactLabels> compact;
    compact.reserve(m);
    for (const auto& s : samples) compact.emplace_back(s);
    std::vector<double> table(m * m, 0.0);
    parallel_for(m, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < m; ++j) table[i * m + j] = partition_loss(loss, ContingencyTable(compact[j], compact[i]));
    });
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) table[j * m + i] = table[i * m + j];
    PartitionSummary out{0, {}, std::vector<double>(m, 0.0)};
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += table[i * m + j];
        out.expected_losses[i] = s / static_cast<double>(m);
        if (out.expected_losses[i] < out.expected_losses[out.index]) out.index = i;
    }
    out.labels = samples[out.index];
    return out;
}

}  // namespace mixsum
