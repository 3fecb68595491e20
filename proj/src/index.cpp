#include "mci/index.hpp"

#include <algorithm>
#include <limits>

namespace mci {

// ---------------------------------------------------------------------------
// RaggedArray
// ---------------------------------------------------------------------------

std::size_t RaggedArray::append_row(std::span<const std::uint32_t> values) {
    start_.push_back(pool_.size());
    len_.push_back(static_cast<std::uint32_t>(values.size()));
    cap_.push_back(static_cast<std::uint32_t>(values.size()));
    pool_.insert(pool_.end(), values.begin(), values.end());
    total_ += values.size();
    return start_.size() - 1;
}

void RaggedArray::push_back(std::size_t r, std::uint32_t value) {
    if (len_[r] == cap_[r]) {
        const std::uint32_t cap = std::max<std::uint32_t>(4, cap_[r] * 2);
        const std::uint64_t fresh = pool_.size();
        pool_.resize(pool_.size() + cap);
        std::copy_n(pool_.begin() + static_cast<std::ptrdiff_t>(start_[r]), len_[r],
                    pool_.begin() + static_cast<std::ptrdiff_t>(fresh));
        start_[r] = fresh;
        cap_[r] = cap;
    }
    pool_[start_[r] + len_[r]] = value;
    ++len_[r];
    ++total_;
}

bool RaggedArray::erase(std::size_t r, std::uint32_t value) {
    auto first = pool_.begin() + static_cast<std::ptrdiff_t>(start_[r]);
    auto last = first + len_[r];
    auto it = std::find(first, last, value);
    if (it == last) return false;
    std::copy(it + 1, last, it);
    --len_[r];
    --total_;
    return true;
}

void RaggedArray::clear_row(std::size_t r) {
    total_ -= len_[r];
    len_[r] = 0;
}

void RaggedArray::compact() {
    std::vector<std::uint32_t> pool;
    pool.reserve(total_);
    for (std::size_t r = 0; r < start_.size(); ++r) {
        const std::uint64_t s = pool.size();
        pool.insert(pool.end(), pool_.begin() + static_cast<std::ptrdiff_t>(start_[r]),
                    pool_.begin() + static_cast<std::ptrdiff_t>(start_[r] + len_[r]));
        start_[r] = s;
        cap_[r] = len_[r];
    }
    pool_ = std::move(pool);
}

void RaggedArray::reserve(std::size_t rows, std::size_t entries) {
    start_.reserve(rows);
    len_.reserve(rows);
    cap_.reserve(rows);
    pool_.reserve(entries);
}

RaggedArray RaggedArray::from_csr(std::span<const std::uint64_t> offsets,
                                  std::span<const std::uint32_t> values) {
    RaggedArray out;
    const std::size_t rows = offsets.empty() ? 0 : offsets.size() - 1;
    out.pool_.assign(values.begin(), values.end());
    out.start_.resize(rows);
    out.len_.resize(rows);
    out.cap_.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        out.start_[r] = offsets[r];
        out.len_[r] = static_cast<std::uint32_t>(offsets[r + 1] - offsets[r]);
        out.cap_[r] = out.len_[r];
    }
    out.total_ = values.size();
    return out;
}

// ---------------------------------------------------------------------------
// CliqueIndex
// ---------------------------------------------------------------------------

CliqueIndex::CliqueIndex(std::size_t n, std::uint32_t k_prime, std::uint32_t tau)
    : k_prime_(k_prime), tau_(tau), live_(n, 1), live_count_(n) {
    for (std::size_t u = 0; u < n; ++u) node_cliques_.append_row({});
}

std::vector<NodeId> CliqueIndex::deleted_ids() const {
    std::vector<NodeId> out;
    for (std::size_t u = 0; u < live_.size(); ++u) {
        if (live_[u] == 0) out.push_back(static_cast<NodeId>(u));
    }
    return out;
}

std::size_t CliqueIndex::pseudo_count() const {
    return static_cast<std::size_t>(std::count(kinds_.begin(), kinds_.end(), CliqueKind::pseudo));
}

std::uint32_t CliqueIndex::add_clique(const Clique& clique) {
    const bool audited = thresholds_.size() == kinds_.size();
    const auto id = static_cast<std::uint32_t>(members_.append_row(clique.members));
    kinds_.push_back(clique.kind);
    if (audited) {
        thresholds_.push_back(clique.kind == CliqueKind::pseudo ? std::numeric_limits<double>::infinity()
                                                                : clique.threshold);
        centers_.push_back(clique.center);
    }
    for (NodeId u : clique.members) node_cliques_.push_back(u, id);
    return id;
}

void CliqueIndex::add_member(std::uint32_t clique, NodeId u) {
    const auto row = members_.row(clique);
    if (!row.empty() && row.back() >= u) {
        throw InvalidArgument("add_member: node " + std::to_string(u) +
                              " would break ascending member order of clique " + std::to_string(clique));
    }
    members_.push_back(clique, u);
    node_cliques_.push_back(u, clique);
}

void CliqueIndex::remove_member(std::uint32_t clique, NodeId u) {
    if (members_.erase(clique, u)) node_cliques_.erase(u, clique);
}

void CliqueIndex::dissolve(std::uint32_t clique) {
    for (NodeId u : members_.row(clique)) node_cliques_.erase(u, clique);
    members_.clear_row(clique);
}

NodeId CliqueIndex::add_node() {
    live_.push_back(1);
    ++live_count_;
    node_cliques_.append_row({});
    return static_cast<NodeId>(live_.size() - 1);
}

void CliqueIndex::mark_deleted(NodeId u) {
    if (u >= live_.size() || live_[u] == 0) {
        throw NotFoundError("node " + std::to_string(u) + " is not a live node of the index");
    }
    live_[u] = 0;
    --live_count_;
}

void CliqueIndex::compact() {
    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> pool;
    std::vector<CliqueKind> kinds;
    std::vector<double> thresholds;
    std::vector<NodeId> centers;
    const bool audited = thresholds_.size() == kinds_.size();
    for (std::size_t c = 0; c < clique_count(); ++c) {
        const auto row = members_.row(c);
        if (row.empty()) continue;
        pool.insert(pool.end(), row.begin(), row.end());
        offsets.push_back(pool.size());
        kinds.push_back(kinds_[c]);
        if (audited) {
            thresholds.push_back(thresholds_[c]);
            centers.push_back(centers_[c]);
        }
    }
    members_ = RaggedArray::from_csr(offsets, pool);
    kinds_ = std::move(kinds);
    thresholds_ = std::move(thresholds);
    centers_ = std::move(centers);

    std::vector<std::vector<std::uint32_t>> inverse(live_.size());
    for (std::size_t c = 0; c < clique_count(); ++c) {
        for (NodeId u : members_.row(c)) inverse[u].push_back(static_cast<std::uint32_t>(c));
    }
    RaggedArray nc;
    std::size_t total = 0;
    for (const auto& v : inverse) total += v.size();
    nc.reserve(inverse.size(), total);
    for (const auto& v : inverse) nc.append_row(v);
    node_cliques_ = std::move(nc);
}

void CliqueIndex::validate(bool check_size_bound) const {
    const std::size_t n = size();
    if (kinds_.size() != clique_count()) throw Error("index validation failed: kind-table size");
    if (node_cliques_.rows() != n) throw Error("index validation failed: inverse-index row count");

    std::vector<std::size_t> seen(n, 0);
    for (std::size_t c = 0; c < clique_count(); ++c) {
        const auto row = members_.row(c);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] >= n) {
                throw Error("index validation failed: member-range (clique " + std::to_string(c) +
                            " references node " + std::to_string(row[i]) + ")");
            }
            if (i > 0 && row[i - 1] >= row[i]) {
                throw Error("index validation failed: member-order (clique " + std::to_string(c) + ")");
            }
            if (live_[row[i]] == 0) {
                throw Error("index validation failed: deleted-member (clique " + std::to_string(c) +
                            " holds deleted node " + std::to_string(row[i]) + ")");
            }
            ++seen[row[i]];
        }
    }
    for (std::size_t u = 0; u < n; ++u) {
        const auto cl = node_cliques_.row(u);
        if (cl.size() != seen[u]) {
            throw Error("index validation failed: inverse-index (node " + std::to_string(u) + ")");
        }
        for (std::uint32_t c : cl) {
            if (c >= clique_count()) {
                throw Error("index validation failed: inverse-index (node " + std::to_string(u) +
                            " lists clique " + std::to_string(c) + ")");
            }
            const auto row = members_.row(c);
            if (!std::binary_search(row.begin(), row.end(), static_cast<NodeId>(u))) {
                throw Error("index validation failed: inverse-index (node " + std::to_string(u) +
                            " not in clique " + std::to_string(c) + ")");
            }
        }
        if (live_[u] != 0 && cl.empty()) {
            throw Error("index validation failed: coverage (node " + std::to_string(u) + " is in no clique)");
        }
    }
    // Every clique comes from a local set of at most k'+1 nodes and covers at
    // least one new node, so n * (k'+1) is a hard ceiling.
    if (check_size_bound) {
        const std::size_t cap = n * (static_cast<std::size_t>(k_prime_) + 1);
        if (total_members() > cap) {
            throw Error("index validation failed: size-bound (" + std::to_string(total_members()) +
                        " member entries > n*(k'+1) = " + std::to_string(cap) + ")");
        }
    }
}

bool equal_structure(const CliqueIndex& a, const CliqueIndex& b) {
    if (a.size() != b.size() || a.k_prime_ != b.k_prime_ || a.tau_ != b.tau_) return false;
    if (a.clique_count() != b.clique_count() || a.live_ != b.live_ || a.kinds_ != b.kinds_) return false;
    for (std::size_t c = 0; c < a.clique_count(); ++c) {
        const auto x = a.members(c);
        const auto y = b.members(c);
        if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
    }
    for (std::size_t u = 0; u < a.size(); ++u) {
        const auto x = a.cliques_of(static_cast<NodeId>(u));
        const auto y = b.cliques_of(static_cast<NodeId>(u));
        if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
    }
    return a.meta_ == b.meta_;
}

}  // namespace mci
