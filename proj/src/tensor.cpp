#include "aqft/tensor.hpp"

#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace aqft {

IndexSpace make_space(std::string label, int dim)
{
    if (dim < 1)
        throw AqftError("index space '" + label + "' must have dim >= 1, got " + std::to_string(dim));
    return IndexSpace{std::move(label), dim, {}};
}

Tensor::Tensor(std::vector<IndexSpace> spaces) : spaces_(std::move(spaces))
{
    for (const auto& s : spaces_)
        if (s.dim < 1)
            throw AqftError("tensor over invalid space '" + s.label + "'");
}

Tensor::Key Tensor::stride(int leg) const
{
    Key s = 1;
    for (int i = 0; i < leg; ++i)
        s *= static_cast<Key>(spaces_[i].dim);
    return s;
}

Tensor::Key Tensor::total_size() const
{
    Key s = 1;
    for (const auto& sp : spaces_)
        s *= static_cast<Key>(sp.dim);
    return s;
}

Tensor::Key Tensor::pack(const std::vector<int>& idx) const
{
    if (static_cast<int>(idx.size()) != rank())
        throw AqftError("multi-index rank mismatch");
    Key k = 0, s = 1;
    for (int i = 0; i < rank(); ++i) {
        if (idx[i] < 0 || idx[i] >= spaces_[i].dim)
            throw AqftError("multi-index out of bounds on '" + spaces_[i].label + "'");
        k += static_cast<Key>(idx[i]) * s;
        s *= static_cast<Key>(spaces_[i].dim);
    }
    return k;
}

std::vector<int> Tensor::unpack(Key k) const
{
    std::vector<int> idx(rank());
    for (int i = 0; i < rank(); ++i) {
        Key d = static_cast<Key>(spaces_[i].dim);
        idx[i] = static_cast<int>(k % d);
        k /= d;
    }
    return idx;
}

void Tensor::set(const std::vector<int>& idx, cplx v)
{
    Key k = pack(idx);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), k,
                               [](const Entry& e, Key key) { return e.first < key; });
    if (it != entries_.end() && it->first == k) {
        if (std::abs(v) < kZeroThreshold)
            entries_.erase(it);
        else
            it->second = v;
    } else if (std::abs(v) >= kZeroThreshold) {
        entries_.insert(it, {k, v});
    }
}

cplx Tensor::get(const std::vector<int>& idx) const
{
    Key k = pack(idx);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), k,
                               [](const Entry& e, Key key) { return e.first < key; });
    if (it != entries_.end() && it->first == k)
        return it->second;
    return 0.0;
}

void Tensor::assign_entries(std::vector<Entry> raw)
{
    std::sort(raw.begin(), raw.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    entries_.clear();
    entries_.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size();) {
        Key k = raw[i].first;
        cplx v = 0.0;
        while (i < raw.size() && raw[i].first == k) {
            v += raw[i].second;
            ++i;
        }
        if (std::abs(v) >= kZeroThreshold)
            entries_.push_back({k, v});
    }
}

void Tensor::prune(double thr)
{
    entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                  [&](const Entry& e) { return std::abs(e.second) < thr; }),
                   entries_.end());
}

Tensor Tensor::permuted(const std::vector<int>& perm) const
{
    if (static_cast<int>(perm.size()) != rank())
        throw AqftError("permutation rank mismatch");
    std::vector<IndexSpace> ns(rank());
    for (int p = 0; p < rank(); ++p)
        ns[p] = spaces_[perm[p]];
    Tensor out(ns);
    std::vector<Key> newstride(rank());
    {
        Key s = 1;
        std::vector<Key> str(rank());
        for (int p = 0; p < rank(); ++p) {
            str[p] = s;
            s *= static_cast<Key>(ns[p].dim);
        }
        // newstride[old leg] = stride of its new position
        for (int p = 0; p < rank(); ++p)
            newstride[perm[p]] = str[p];
    }
    std::vector<Entry> raw;
    raw.reserve(entries_.size());
    for (const auto& [k, v] : entries_) {
        Key rem = k, nk = 0;
        for (int i = 0; i < rank(); ++i) {
            Key d = static_cast<Key>(spaces_[i].dim);
            nk += (rem % d) * newstride[i];
            rem /= d;
        }
        raw.push_back({nk, v});
    }
    out.assign_entries(std::move(raw));
    return out;
}

Tensor Tensor::conjugated() const
{
    Tensor out(spaces_);
    auto es = entries_;
    for (auto& e : es)
        e.second = std::conj(e.second);
    out.assign_entries(std::move(es));
    return out;
}

Tensor Tensor::scaled(cplx s) const
{
    Tensor out(spaces_);
    auto es = entries_;
    for (auto& e : es)
        e.second *= s;
    out.assign_entries(std::move(es));
    return out;
}

double Tensor::max_abs() const
{
    double m = 0.0;
    for (const auto& e : entries_)
        m = std::max(m, std::abs(e.second));
    return m;
}

double Tensor::frobenius_norm() const
{
    double s = 0.0;
    for (const auto& e : entries_)
        s += std::norm(e.second);
    return std::sqrt(s);
}

Tensor Tensor::scalar(cplx v)
{
    Tensor t{std::vector<IndexSpace>{}};
    if (std::abs(v) >= kZeroThreshold)
        t.assign_entries({{0, v}});
    return t;
}

namespace {

struct Packed {
    Tensor::Key free_key;
    Tensor::Key cont_key;
    cplx v;
};

} // namespace

Tensor contract(const Tensor& a, const Tensor& b, const std::vector<std::pair<int, int>>& pairs)
{
    using Key = Tensor::Key;
    std::vector<bool> acont(a.rank(), false), bcont(b.rank(), false);
    for (auto [ia, ib] : pairs) {
        if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank())
            throw AqftError("contraction leg out of range");
        if (acont[ia] || bcont[ib])
            throw AqftError("contraction leg repeated");
        if (a.spaces()[ia].dim != b.spaces()[ib].dim)
            throw AqftError("dimension mismatch contracting '" + a.spaces()[ia].label + "' (dim " +
                            std::to_string(a.spaces()[ia].dim) + ") with '" + b.spaces()[ib].label +
                            "' (dim " + std::to_string(b.spaces()[ib].dim) + ")");
        acont[ia] = true;
        bcont[ib] = true;
    }

    std::vector<int> afree, bfree;
    for (int i = 0; i < a.rank(); ++i)
        if (!acont[i])
            afree.push_back(i);
    for (int i = 0; i < b.rank(); ++i)
        if (!bcont[i])
            bfree.push_back(i);

    std::vector<IndexSpace> out_spaces;
    for (int i : afree)
        out_spaces.push_back(a.spaces()[i]);
    for (int i : bfree)
        out_spaces.push_back(b.spaces()[i]);
    Tensor out(out_spaces);

    // per-leg (stride-in-free-key, stride-in-cont-key) decomposition
    auto make_packed = [&](const Tensor& t, const std::vector<int>& free,
                           const std::vector<int>& contlegs) {
        std::vector<Key> fstride(t.rank(), 0), cstride(t.rank(), 0);
        Key fs = 1;
        for (int leg : free) {
            fstride[leg] = fs;
            fs *= static_cast<Key>(t.spaces()[leg].dim);
        }
        Key cs = 1;
        for (int leg : contlegs) {
            cstride[leg] = cs;
            cs *= static_cast<Key>(t.spaces()[leg].dim);
        }
        std::vector<Packed> packed;
        packed.reserve(t.entries().size());
        for (const auto& [k, v] : t.entries()) {
            Key rem = k, fk = 0, ck = 0;
            for (int i = 0; i < t.rank(); ++i) {
                Key d = static_cast<Key>(t.spaces()[i].dim);
                Key digit = rem % d;
                rem /= d;
                fk += digit * fstride[i];
                ck += digit * cstride[i];
            }
            packed.push_back({fk, ck, v});
        }
        std::sort(packed.begin(), packed.end(), [](const Packed& x, const Packed& y) {
            return x.cont_key != y.cont_key ? x.cont_key < y.cont_key : x.free_key < y.free_key;
        });
        return packed;
    };

    std::vector<int> aclegs, bclegs;
    for (auto [ia, ib] : pairs) {
        aclegs.push_back(ia);
        bclegs.push_back(ib);
    }
    auto pa = make_packed(a, afree, aclegs);
    auto pb = make_packed(b, bfree, bclegs);

    Key afree_size = 1;
    for (int i : afree)
        afree_size *= static_cast<Key>(a.spaces()[i].dim);

    std::vector<Tensor::Entry> raw;
    std::size_t i = 0, j = 0;
    while (i < pa.size() && j < pb.size()) {
        if (pa[i].cont_key < pb[j].cont_key) {
            ++i;
        } else if (pb[j].cont_key < pa[i].cont_key) {
            ++j;
        } else {
            Key ck = pa[i].cont_key;
            std::size_t i2 = i, j2 = j;
            while (i2 < pa.size() && pa[i2].cont_key == ck)
                ++i2;
            while (j2 < pb.size() && pb[j2].cont_key == ck)
                ++j2;
            for (std::size_t x = i; x < i2; ++x)
                for (std::size_t y = j; y < j2; ++y)
                    raw.push_back({pa[x].free_key + pb[y].free_key * afree_size,
                                   pa[x].v * pb[y].v});
            i = i2;
            j = j2;
        }
    }
    out.assign_entries(std::move(raw));
    return out;
}

Tensor tensor_sum(const Tensor& a, const Tensor& b, cplx ca, cplx cb)
{
    if (a.rank() != b.rank())
        throw AqftError("tensor_sum rank mismatch");
    for (int i = 0; i < a.rank(); ++i)
        if (a.spaces()[i].dim != b.spaces()[i].dim)
            throw AqftError("tensor_sum dimension mismatch on leg " + std::to_string(i));
    Tensor out(a.spaces());
    std::vector<Tensor::Entry> raw;
    raw.reserve(a.entries().size() + b.entries().size());
    for (const auto& e : a.entries())
        raw.push_back({e.first, ca * e.second});
    for (const auto& e : b.entries())
        raw.push_back({e.first, cb * e.second});
    out.assign_entries(std::move(raw));
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b)
{
    return tensor_sum(a, b, 1.0, -1.0).max_abs();
}

int LinearMap::in_dim() const
{
    int d = 1;
    for (const auto& s : ins)
        d *= s.dim;
    return d;
}

int LinearMap::out_dim() const
{
    int d = 1;
    for (const auto& s : outs)
        d *= s.dim;
    return d;
}

LinearMap identity_map(const std::vector<IndexSpace>& spaces)
{
    std::vector<IndexSpace> legs = spaces;
    legs.insert(legs.end(), spaces.begin(), spaces.end());
    Tensor t(legs);
    int n = static_cast<int>(spaces.size());
    Tensor::Key sz = 1;
    for (const auto& s : spaces)
        sz *= static_cast<Tensor::Key>(s.dim);
    std::vector<Tensor::Entry> raw;
    for (Tensor::Key k = 0; k < sz; ++k)
        raw.push_back({k + k * sz, 1.0});
    (void)n;
    t.assign_entries(std::move(raw));
    return LinearMap{spaces, spaces, std::move(t)};
}

LinearMap swap_map(const IndexSpace& a, const IndexSpace& b)
{
    Tensor t({b, a, a, b});
    std::vector<Tensor::Entry> raw;
    for (int i = 0; i < a.dim; ++i)
        for (int j = 0; j < b.dim; ++j)
            t.set({j, i, i, j}, 1.0);
    return LinearMap{{b, a}, {a, b}, std::move(t)};
}

LinearMap compose(const LinearMap& f, const LinearMap& g)
{
    if (f.ins.size() != g.outs.size())
        throw AqftError("compose: arity mismatch");
    for (std::size_t i = 0; i < f.ins.size(); ++i)
        if (f.ins[i] != g.outs[i])
            throw AqftError("compose: space mismatch at slot " + std::to_string(i) + ": '" +
                            f.ins[i].label + "' vs '" + g.outs[i].label + "'");
    std::vector<std::pair<int, int>> pairs;
    int no = static_cast<int>(f.outs.size());
    for (std::size_t i = 0; i < f.ins.size(); ++i)
        pairs.push_back({no + static_cast<int>(i), static_cast<int>(i)});
    Tensor t = contract(f.t, g.t, pairs);
    return LinearMap{f.outs, g.ins, std::move(t)};
}

LinearMap tensor_of(const LinearMap& f, const LinearMap& g)
{
    // outer product, then interleave legs to [f.outs, g.outs, f.ins, g.ins]
    Tensor t = contract(f.t, g.t, {});
    int fo = static_cast<int>(f.outs.size()), fi = static_cast<int>(f.ins.size());
    int go = static_cast<int>(g.outs.size()), gi = static_cast<int>(g.ins.size());
    std::vector<int> perm;
    for (int i = 0; i < fo; ++i)
        perm.push_back(i);
    for (int i = 0; i < go; ++i)
        perm.push_back(fo + fi + i);
    for (int i = 0; i < fi; ++i)
        perm.push_back(fo + i);
    for (int i = 0; i < gi; ++i)
        perm.push_back(fo + fi + go + i);
    t = t.permuted(perm);
    std::vector<IndexSpace> outs = f.outs, ins = f.ins;
    outs.insert(outs.end(), g.outs.begin(), g.outs.end());
    ins.insert(ins.end(), g.ins.begin(), g.ins.end());
    return LinearMap{std::move(outs), std::move(ins), std::move(t)};
}

LinearMap adjoint(const LinearMap& m)
{
    int no = static_cast<int>(m.outs.size()), ni = static_cast<int>(m.ins.size());
    std::vector<int> perm;
    for (int i = 0; i < ni; ++i)
        perm.push_back(no + i);
    for (int i = 0; i < no; ++i)
        perm.push_back(i);
    Tensor t = m.t.conjugated().permuted(perm);
    return LinearMap{m.ins, m.outs, std::move(t)};
}

LinearMap lm_sum(const LinearMap& a, const LinearMap& b, cplx ca, cplx cb)
{
    return LinearMap{a.outs, a.ins, tensor_sum(a.t, b.t, ca, cb)};
}

LinearMap lm_scale(const LinearMap& a, cplx s)
{
    return LinearMap{a.outs, a.ins, a.t.scaled(s)};
}

Tensor apply_to_leg(const Tensor& t, const LinearMap& m, int leg)
{
    if (m.ins.size() != 1 || m.outs.size() != 1)
        throw AqftError("apply_to_leg wants a single-leg map");
    Tensor r = contract(t, m.t, {{leg, 1}}); // legs: t-free ++ [m.out]
    std::vector<int> perm;
    int n = r.rank();
    int pos = 0;
    for (int p = 0; p < n; ++p) {
        if (p == leg) {
            perm.push_back(n - 1);
        } else {
            perm.push_back(pos);
            ++pos;
        }
    }
    return r.permuted(perm);
}

Eigen::MatrixXcd to_dense(const LinearMap& m)
{
    long rows = m.out_dim(), cols = m.in_dim();
    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(rows, cols);
    Tensor::Key osz = static_cast<Tensor::Key>(rows);
    for (const auto& [k, v] : m.t.entries()) {
        long r = static_cast<long>(k % osz);
        long c = static_cast<long>(k / osz);
        mat(r, c) = v;
    }
    return mat;
}

LinearMap from_dense(const Eigen::MatrixXcd& mat, std::vector<IndexSpace> outs,
                     std::vector<IndexSpace> ins)
{
    std::vector<IndexSpace> legs = outs;
    legs.insert(legs.end(), ins.begin(), ins.end());
    Tensor t(legs);
    long rows = 1, cols = 1;
    for (const auto& s : outs)
        rows *= s.dim;
    for (const auto& s : ins)
        cols *= s.dim;
    if (mat.rows() != rows || mat.cols() != cols)
        throw AqftError("from_dense shape mismatch");
    std::vector<Tensor::Entry> raw;
    for (long c = 0; c < cols; ++c)
        for (long r = 0; r < rows; ++r)
            if (std::abs(mat(r, c)) >= kZeroThreshold)
                raw.push_back({static_cast<Tensor::Key>(r) +
                                   static_cast<Tensor::Key>(c) * static_cast<Tensor::Key>(rows),
                               mat(r, c)});
    t.assign_entries(std::move(raw));
    return LinearMap{std::move(outs), std::move(ins), std::move(t)};
}

double operator_norm(const LinearMap& m)
{
    Eigen::MatrixXcd B = to_dense(m);
    if (B.size() == 0)
        return 0.0;
    double fro = B.norm();
    if (fro == 0.0)
        return 0.0;
    std::mt19937_64 rng(0x51e9dULL);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXcd v(B.cols());
    for (long i = 0; i < v.size(); ++i)
        v(i) = cplx(dist(rng), dist(rng));
    v.normalize();
    double prev = 0.0;
    for (int it = 0; it < 20000; ++it) {
        Eigen::VectorXcd w = B * v;
        if (w.norm() == 0.0)
            return 0.0;
        v = B.adjoint() * w;
        double s2 = v.norm(); // |B†Bv| -> sigma^2 for unit v
        if (s2 == 0.0)
            return 0.0;
        v /= s2;
        double est = std::sqrt(s2);
        if (it > 2 && std::abs(est - prev) <= 1e-12 * std::max(1.0, est))
            return est;
        prev = est;
    }
    return prev;
}

double op_distance(const LinearMap& a, const LinearMap& b)
{
    return operator_norm(lm_sum(a, b, 1.0, -1.0));
}

double sup_distance(const LinearMap& a, const LinearMap& b)
{
    return max_abs_diff(a.t, b.t);
}

SplitResult split_idempotent(const LinearMap& D, double tol, const std::string& image_label)
{
    if (D.outs.size() != D.ins.size())
        throw AqftError("split_idempotent: map is not square");
    for (std::size_t i = 0; i < D.outs.size(); ++i)
        if (D.outs[i].dim != D.ins[i].dim)
            throw AqftError("split_idempotent: map is not square");
    Eigen::MatrixXcd M = to_dense(D);
    double defect = (M * M - M).norm();
    if (defect > tol * std::max<double>(1.0, M.norm()))
        throw AqftError("split_idempotent: input not idempotent, defect " + std::to_string(defect));

    long n = M.rows();
    bool selfadj = (M - M.adjoint()).norm() <= tol * std::max(1.0, M.norm());
    Eigen::MatrixXcd U; // orthonormal basis of the image
    int rank = 0;
    if (selfadj) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
        std::vector<long> keep;
        for (long i = 0; i < n; ++i)
            if (es.eigenvalues()(i) > std::max(tol, 0.5))
                keep.push_back(i);
        rank = static_cast<int>(keep.size());
        U.resize(n, rank);
        for (int j = 0; j < rank; ++j)
            U.col(j) = es.eigenvectors().col(keep[j]);
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU);
        std::vector<long> keep;
        for (long i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > std::max(tol, 0.5))
                keep.push_back(i);
        rank = static_cast<int>(keep.size());
        U.resize(n, rank);
        for (int j = 0; j < rank; ++j)
            U.col(j) = svd.matrixU().col(keep[j]);
    }
    IndexSpace im = make_space(image_label, std::max(rank, 1));
    if (rank == 0) {
        // zero idempotent: empty image represented as a dim-1 space with zero maps
        LinearMap proj = from_dense(Eigen::MatrixXcd::Zero(1, n), {im}, D.ins);
        LinearMap inj = from_dense(Eigen::MatrixXcd::Zero(n, 1), D.outs, {im});
        return SplitResult{std::move(proj), std::move(inj), 0};
    }
    Eigen::MatrixXcd P = U.adjoint() * M; // proj;  inj∘proj = U U† M = M, proj∘inj = U† M U = id
    LinearMap proj = from_dense(P, {im}, D.ins);
    LinearMap inj = from_dense(U, D.outs, {im});
    return SplitResult{std::move(proj), std::move(inj), rank};
}

} // namespace aqft
