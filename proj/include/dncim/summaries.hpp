#pragma once

// Block partitioning, per-block summaries (n_b, MLE, observed information),
// and their information-weighted combination.

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dncim/error.hpp"
#include "dncim/linalg.hpp"
#include "dncim/models.hpp"
#include "dncim/random.hpp"

namespace dncim {

struct BlockSummary {
    std::size_t n = 0;
    Vector theta_hat;
    Matrix info;
};

struct AggregatedSummary {
    std::vector<BlockSummary> blocks;
    Vector theta_check;
    Matrix total_info;

    int dim() const noexcept { return static_cast<int>(theta_check.size()); }

    std::vector<std::size_t> block_sizes() const
    {
        std::vector<std::size_t> sizes;
        sizes.reserve(blocks.size());
        for (const auto& b : blocks)
            sizes.push_back(b.n);
        return sizes;
    }
};

/// Sizes for splitting n observations into B blocks that differ by at most
/// one; the larger blocks come last.
inline std::vector<std::size_t> balanced_block_sizes(std::size_t n, std::size_t blocks)
{
    if (blocks == 0) throw DomainError("partition: B must be positive");
    if (blocks > n)
        throw DomainError("partition: B = " + std::to_string(blocks) + " exceeds n = " + std::to_string(n));
    std::vector<std::size_t> sizes(blocks, n / blocks);
    const std::size_t extra = n % blocks;
    for (std::size_t b = blocks - extra; b < blocks; ++b)
        ++sizes[b];
    return sizes;
}

/// Uniformly shuffle the observations (Fisher-Yates) and cut them into
/// contiguous chunks of the given sizes.
inline std::vector<Dataset> partition_sizes(std::span<const double> data, const std::vector<std::size_t>& sizes,
                                            RandomStream& rng)
{
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total != data.size())
        throw DomainError("partition: block sizes sum to " + std::to_string(total) + " but n = " +
                          std::to_string(data.size()));
    for (auto s : sizes)
        if (s == 0) throw DomainError("partition: empty block requested");
    Dataset shuffled(data.begin(), data.end());
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    std::vector<Dataset> blocks;
    blocks.reserve(sizes.size());
    auto it = shuffled.begin();
    for (auto s : sizes) {
        blocks.emplace_back(it, it + static_cast<std::ptrdiff_t>(s));
        it += static_cast<std::ptrdiff_t>(s);
    }
    return blocks;
}

inline std::vector<Dataset> partition(std::span<const double> data, std::size_t blocks, RandomStream& rng)
{
    return partition_sizes(data, balanced_block_sizes(data.size(), blocks), rng);
}

/// MLE and observed information of one block. Propagates OptimFailure and
/// NotPositiveDefinite.
inline BlockSummary summarize_block(const ModelSpec& model, std::span<const double> block, const Vector& init)
{
    require_nonempty(block, "summarize_block");
    BlockSummary s;
    s.n = block.size();
    s.theta_hat = mle(model, block, init);
    s.info = observed_information(model, s.theta_hat, block);
    return s;
}

inline BlockSummary summarize_block(const ModelSpec& model, std::span<const double> block)
{
    return summarize_block(model, block, default_init(model, block));
}

/// Information-weighted combination: theta_check = (sum J_b)^-1 sum J_b theta_hat_b,
/// solved by Cholesky factorization of the total information.
inline AggregatedSummary combine(std::vector<BlockSummary> blocks)
{
    if (blocks.empty()) throw DomainError("combine: no block summaries");
    const auto p = blocks.front().theta_hat.size();
    Matrix total = Matrix::Zero(p, p);
    Vector weighted = Vector::Zero(p);
    for (const auto& b : blocks) {
        if (b.theta_hat.size() != p || b.info.rows() != p || b.info.cols() != p)
            throw DomainError("combine: blocks disagree on parameter dimension");
        total += b.info;
        weighted += b.info * b.theta_hat;
    }
    total = symmetrize(total);
    if (spd_condition_number(total) > 1e12)
        throw SingularInformation("combine: total information is numerically singular");
    Eigen::LLT<Matrix> llt(total);
    if (llt.info() != Eigen::Success) throw SingularInformation("combine: total information is not positive definite");
    AggregatedSummary agg;
    agg.theta_check = llt.solve(weighted);
    agg.total_info = std::move(total);
    agg.blocks = std::move(blocks);
    return agg;
}

/// (theta_check - theta)^T J (theta_check - theta).
inline double working_quadratic(const AggregatedSummary& agg, const Vector& theta)
{
    require_same_dim(agg.theta_check, theta, "gauss_relative_likelihood");
    return quadratic_form(agg.theta_check, theta, agg.total_info);
}

/// Gaussian working relative likelihood exp(-q/2).
inline double gauss_relative_likelihood(const AggregatedSummary& agg, const Vector& theta)
{
    return std::exp(-0.5 * working_quadratic(agg, theta));
}

inline void require_coordinate(int dim, int q)
{
    if (q < 0 || q >= dim)
        throw DomainError("coordinate index " + std::to_string(q) + " out of range for dimension " +
                          std::to_string(dim));
}

/// J_qq (theta_check_q - theta_q)^2 using the q-th diagonal entry of the total
/// information. `q` is zero-based.
inline double profile_quadratic(const AggregatedSummary& agg, int q, double theta_q)
{
    require_coordinate(agg.dim(), q);
    const double d = agg.theta_check[q] - theta_q;
    return agg.total_info(q, q) * d * d;
}

inline double profile_gauss_relative_likelihood(const AggregatedSummary& agg, int q, double theta_q)
{
    return std::exp(-0.5 * profile_quadratic(agg, q, theta_q));
}

} // namespace dncim
