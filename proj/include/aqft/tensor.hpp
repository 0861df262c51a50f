#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aqft/common.hpp"

namespace aqft {

/// A labeled finite-dimensional index space with an implicit orthonormal basis.
/// Optional basis tags identify structured bases, e.g. "V:i,j" for matrix-element bases.
struct IndexSpace {
    std::string label;
    int dim = 1;
    std::vector<std::string> tags; // empty or exactly dim entries

    bool operator==(const IndexSpace& o) const { return label == o.label && dim == o.dim; }
    bool operator!=(const IndexSpace& o) const { return !(*this == o); }
};

IndexSpace make_space(std::string label, int dim);

/// Sparse complex tensor over an ordered list of index spaces.
/// Multi-indices are packed little-endian (leg 0 varies fastest) into a 128-bit key;
/// entries are kept sorted by key and pruned at kZeroThreshold.
class Tensor {
public:
    using Key = unsigned __int128;
    using Entry = std::pair<Key, cplx>;

    Tensor() = default;
    explicit Tensor(std::vector<IndexSpace> spaces);

    int rank() const { return static_cast<int>(spaces_.size()); }
    const std::vector<IndexSpace>& spaces() const { return spaces_; }
    const std::vector<Entry>& entries() const { return entries_; }

    Key stride(int leg) const;
    Key total_size() const;
    Key pack(const std::vector<int>& idx) const;
    std::vector<int> unpack(Key k) const;

    void set(const std::vector<int>& idx, cplx v);
    cplx get(const std::vector<int>& idx) const;

    /// Replaces the entry list; sorts, merges duplicates and prunes.
    void assign_entries(std::vector<Entry> raw);
    void prune(double thr = kZeroThreshold);

    Tensor permuted(const std::vector<int>& perm) const; // new leg p holds old leg perm[p]
    Tensor conjugated() const;
    Tensor scaled(cplx s) const;

    double max_abs() const;
    double frobenius_norm() const;

    static Tensor scalar(cplx v);

private:
    std::vector<IndexSpace> spaces_;
    std::vector<Entry> entries_; // sorted by key
};

/// Standard sparse contraction over the given leg pairs (index-of-a, index-of-b).
/// Result legs: free legs of a (in order) followed by free legs of b.
/// Accumulation runs in ascending multi-index order for reproducibility.
Tensor contract(const Tensor& a, const Tensor& b, const std::vector<std::pair<int, int>>& pairs);

Tensor tensor_sum(const Tensor& a, const Tensor& b, cplx ca = 1.0, cplx cb = 1.0);
double max_abs_diff(const Tensor& a, const Tensor& b);

/// A linear map between tensor products of index spaces.
/// The underlying tensor carries the output legs first, then the input legs.
struct LinearMap {
    std::vector<IndexSpace> outs;
    std::vector<IndexSpace> ins;
    Tensor t;

    int in_dim() const;
    int out_dim() const;
};

LinearMap identity_map(const std::vector<IndexSpace>& spaces);
LinearMap swap_map(const IndexSpace& a, const IndexSpace& b); // A⊗B -> B⊗A

/// f∘g; domains must match label-by-label.
LinearMap compose(const LinearMap& f, const LinearMap& g);
LinearMap tensor_of(const LinearMap& f, const LinearMap& g);
LinearMap adjoint(const LinearMap& m);
LinearMap lm_sum(const LinearMap& a, const LinearMap& b, cplx ca = 1.0, cplx cb = 1.0);
LinearMap lm_scale(const LinearMap& a, cplx s);

/// Applies a single-input map to one leg of a tensor, keeping the leg position.
Tensor apply_to_leg(const Tensor& t, const LinearMap& m, int leg);

Eigen::MatrixXcd to_dense(const LinearMap& m);
LinearMap from_dense(const Eigen::MatrixXcd& mat, std::vector<IndexSpace> outs,
                     std::vector<IndexSpace> ins);

/// Largest singular value by power iteration with a fixed seed (relative accuracy 1e-10).
double operator_norm(const LinearMap& m);
double op_distance(const LinearMap& a, const LinearMap& b);
double sup_distance(const LinearMap& a, const LinearMap& b);

struct SplitResult {
    LinearMap proj; // carrier -> image space
    LinearMap inj;  // image space -> carrier
    int rank = 0;
};

/// Splits an idempotent D = inj∘proj with proj∘inj = id.
/// Self-adjoint inputs go through a Hermitian eigendecomposition, general ones
/// through a rank factorization built on the left singular vectors.
SplitResult split_idempotent(const LinearMap& D, double tol,
                             const std::string& image_label = "im");

} // namespace aqft
