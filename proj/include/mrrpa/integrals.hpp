#pragma once

// Spatial-orbital integral store (FCIDUMP conventions) and the small set of
// model generators used throughout the test suite.

#include "mrrpa/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace mrrpa {

/// Index of the unordered pair (p, q) in a packed lower triangle.
inline std::uint64_t pair_index(std::uint64_t p, std::uint64_t q) {
    return p >= q ? p * (p + 1) / 2 + q : q * (q + 1) / 2 + p;
}

/// Canonical key of (pq|rs) shared by all eight real permutations.
inline std::uint64_t eri_key(int p, int q, int r, int s) {
    return pair_index(pair_index(p, q), pair_index(r, s));
}

/// Dense n^4 copy of the two-electron integrals in chemist order.
class DenseEri {
  public:
    DenseEri() = default;
    explicit DenseEri(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

    int norb() const { return n_; }
    double operator()(int p, int q, int r, int s) const { return data_[offset(p, q, r, s)]; }
    double &operator()(int p, int q, int r, int s) { return data_[offset(p, q, r, s)]; }

  private:
    std::size_t offset(int p, int q, int r, int s) const {
        return ((static_cast<std::size_t>(p) * n_ + q) * n_ + r) * n_ + s;
    }
    int n_ = 0;
    std::vector<double> data_;
};

/// One- and two-electron integrals over real spatial orbitals.
///
/// Two-electron integrals are chemist-notation (pq|rs) stored once per
/// 8-fold permutation class; unset entries read as zero.
class IntegralSet {
  public:
    IntegralSet() = default;
    IntegralSet(int norb, int nelec, int ms2) : norb_(norb), nelec_(nelec), ms2_(ms2) {
        if (norb < 1)
            throw UsageError("norb must be at least 1");
        if (nelec < 0 || nelec > 2 * norb)
            throw UsageError(fmt::format("nelec={} outside [0, {}]", nelec, 2 * norb));
        h1_ = Eigen::MatrixXd::Zero(norb, norb);
    }

    int norb() const { return norb_; }
    int nelec() const { return nelec_; }
    int ms2() const { return ms2_; }
    double e_core() const { return e_core_; }
    void set_e_core(double e) { e_core_ = e; }
    void set_nelec(int nelec, int ms2) {
        if (nelec < 0 || nelec > 2 * norb_)
            throw UsageError(fmt::format("nelec={} outside [0, {}]", nelec, 2 * norb_));
        nelec_ = nelec;
        ms2_ = ms2;
    }

    const Eigen::MatrixXd &h1() const { return h1_; }
    double h(int p, int q) const {
        check(p), check(q);
        return h1_(p, q);
    }
    void set_h(int p, int q, double v) {
        check(p), check(q);
        h1_(p, q) = h1_(q, p) = v;
    }

    double eri(int p, int q, int r, int s) const {
        check(p), check(q), check(r), check(s);
        auto it = eri_.find(eri_key(p, q, r, s));
        return it == eri_.end() ? 0.0 : it->second;
    }
    void set_eri(int p, int q, int r, int s, double v) {
        check(p), check(q), check(r), check(s);
        eri_[eri_key(p, q, r, s)] = v;
    }
    std::size_t eri_count() const { return eri_.size(); }

    DenseEri dense_eri() const {
        DenseEri g(norb_);
        for (int p = 0; p < norb_; ++p)
            for (int q = 0; q < norb_; ++q)
                for (int r = 0; r < norb_; ++r)
                    for (int s = 0; s < norb_; ++s) {
                        auto it = eri_.find(eri_key(p, q, r, s));
                        if (it != eri_.end())
                            g(p, q, r, s) = it->second;
                    }
        return g;
    }

    // Header fields kept for round trips; the engine ignores them.
    std::vector<int> orbsym;
    int isym = 1;

  private:
    void check(int p) const {
        if (p < 0 || p >= norb_)
            throw UsageError(fmt::format("orbital index {} outside [0, {})", p, norb_));
    }

    int norb_ = 0;
    int nelec_ = 0;
    int ms2_ = 0;
    double e_core_ = 0.0;
    Eigen::MatrixXd h1_;
    std::unordered_map<std::uint64_t, double> eri_;
};

/// Core / active / virtual labels of the spatial orbitals.
struct OrbitalSpaces {
    std::vector<int> core;
    std::vector<int> active;
    std::vector<int> virt;
    int n_active_electrons = 0;

    int n_core() const { return static_cast<int>(core.size()); }
    int n_active() const { return static_cast<int>(active.size()); }
    int n_virtual() const { return static_cast<int>(virt.size()); }
};

/// Throws UsageError unless `spaces` partitions the orbitals of `set` and
/// accounts for all of its electrons.
inline void validate(const OrbitalSpaces &spaces, const IntegralSet &set) {
    std::vector<int> seen(set.norb(), 0);
    for (const auto *list : {&spaces.core, &spaces.active, &spaces.virt})
        for (int p : *list) {
            if (p < 0 || p >= set.norb())
                throw UsageError(fmt::format("orbital {} outside [0, {})", p, set.norb()));
            if (seen[p]++)
                throw UsageError(fmt::format("orbital {} assigned to more than one space", p));
        }
    for (int p = 0; p < set.norb(); ++p)
        if (!seen[p])
            throw UsageError(fmt::format("orbital {} not assigned to any space", p));
    if (spaces.n_active_electrons < 0 || spaces.n_active_electrons > 2 * spaces.n_active())
        throw UsageError(fmt::format("{} active electrons do not fit in {} active orbitals",
                                     spaces.n_active_electrons, spaces.n_active()));
    if (2 * spaces.n_core() + spaces.n_active_electrons != set.nelec())
        throw UsageError(fmt::format("2*{} core + {} active electrons != nelec {}",
                                     spaces.n_core(), spaces.n_active_electrons, set.nelec()));
}

namespace detail {

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

inline std::optional<double> to_double(const std::string &tok) {
    std::string t = tok;
    // Fortran writers sometimes emit 1.0D-03.
    std::replace(t.begin(), t.end(), 'D', 'E');
    std::replace(t.begin(), t.end(), 'd', 'e');
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline std::optional<long> to_long(const std::string &tok) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        return std::nullopt;
    return v;
}

} // namespace detail

/// Reads an FCIDUMP stream.
///
/// Header: namelist starting with &FCI, KEY=VALUE pairs separated by commas
/// or blanks, closed by "/" or "&END". Body: "value i j k l" with 1-based
/// indices; (i j 0 0) is a one-electron entry, (0 0 0 0) the core energy,
/// anything else (ij|kl). Later duplicates overwrite earlier ones.
inline IntegralSet parse_fcidump(std::istream &in) {
    std::string line;
    int lineno = 0;
    std::string header;
    bool closed = false;
    while (!closed && std::getline(in, line)) {
        ++lineno;
        std::string u = detail::upper(line);
        std::size_t end = std::string::npos;
        std::size_t endtag = u.find("&END");
        std::size_t slash = u.find('/');
        if (endtag != std::string::npos)
            end = endtag;
        if (slash != std::string::npos && slash < end)
            end = slash;
        if (end != std::string::npos) {
            header += u.substr(0, end);
            closed = true;
        } else {
            header += u + " ";
        }
    }
    if (!closed)
        throw ParseError("FCIDUMP header not terminated by '/' or '&END'", lineno);
    const int header_end_line = lineno;

    std::size_t start = header.find("&FCI");
    if (start == std::string::npos)
        throw ParseError("FCIDUMP header does not start with &FCI", 1);
    header = header.substr(start + 4);
    for (auto &c : header)
        if (c == ',')
            c = ' ';
    std::string spaced;
    for (char c : header) {
        if (c == '=')
            spaced += " = ";
        else
            spaced += c;
    }

    std::map<std::string, std::vector<std::string>> fields;
    {
        std::istringstream ts(spaced);
        std::vector<std::string> toks;
        for (std::string t; ts >> t;)
            toks.push_back(t);
        std::string key;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i + 1 < toks.size() && toks[i + 1] == "=") {
                key = toks[i];
                fields[key];
                ++i;
            } else if (toks[i] == "=" || key.empty()) {
                throw ParseError("malformed FCIDUMP header near '" + toks[i] + "'", 1);
            } else {
                fields[key].push_back(toks[i]);
            }
        }
    }
    auto int_field = [&](const std::string &key) -> long {
        auto it = fields.find(key);
        if (it == fields.end() || it->second.empty())
            throw ParseError("FCIDUMP header is missing " + key, header_end_line);
        auto v = detail::to_long(it->second.front());
        if (!v)
            throw ParseError("FCIDUMP header field " + key + " is not an integer", header_end_line);
        return *v;
    };
    const long norb = int_field("NORB");
    const long nelec = int_field("NELEC");
    const long ms2 = int_field("MS2");
    if (norb < 1)
        throw ParseError("NORB must be positive", header_end_line);
    if (nelec < 0 || nelec > 2 * norb)
        throw ParseError("NELEC outside [0, 2*NORB]", header_end_line);
    if (fields.contains("IUHF") && !fields["IUHF"].empty() && fields["IUHF"].front() != "0")
        throw ParseError("unrestricted FCIDUMP files are not supported", header_end_line);

    IntegralSet set(static_cast<int>(norb), static_cast<int>(nelec), static_cast<int>(ms2));
    if (auto it = fields.find("ORBSYM"); it != fields.end())
        for (const auto &t : it->second) {
            auto v = detail::to_long(t);
            if (!v)
                throw ParseError("ORBSYM entry '" + t + "' is not an integer", header_end_line);
            set.orbsym.push_back(static_cast<int>(*v));
        }
    if (auto it = fields.find("ISYM"); it != fields.end() && !it->second.empty())
        if (auto v = detail::to_long(it->second.front()))
            set.isym = static_cast<int>(*v);

    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;)
            toks.push_back(t);
        if (toks.empty())
            continue;
        if (toks.size() == 6 || (toks.size() == 5 && toks[0].starts_with("(")))
            throw ParseError("complex-valued integrals are not supported", lineno);
        if (toks.size() != 5)
            throw ParseError(fmt::format("expected 5 fields, found {}", toks.size()), lineno);
        auto value = detail::to_double(toks[0]);
        if (!value)
            throw ParseError("non-numeric value '" + toks[0] + "'", lineno);
        int idx[4];
        for (int k = 0; k < 4; ++k) {
            auto v = detail::to_long(toks[k + 1]);
            if (!v)
                throw ParseError("non-integer index '" + toks[k + 1] + "'", lineno);
            if (*v < 0 || *v > norb)
                throw ParseError(fmt::format("index {} outside [0, {}]", *v, norb), lineno);
            idx[k] = static_cast<int>(*v);
        }
        const auto [i, j, k, l] = idx;
        if (i == 0 && j == 0 && k == 0 && l == 0)
            set.set_e_core(*value);
        else if (k == 0 && l == 0 && i > 0 && j > 0)
            set.set_h(i - 1, j - 1, *value);
        else if (i > 0 && j > 0 && k > 0 && l > 0)
            set.set_eri(i - 1, j - 1, k - 1, l - 1, *value);
        else if (i > 0 && j == 0 && k == 0 && l == 0)
            continue; // orbital energy line, informational only
        else
            throw ParseError(fmt::format("unrecognized index pattern {} {} {} {}", i, j, k, l),
                             lineno);
    }
    return set;
}

inline IntegralSet parse_fcidump(const std::string &text) {
    std::istringstream in(text);
    return parse_fcidump(in);
}

/// Writes an FCIDUMP with 16 significant digits; zero integrals are skipped.
inline void write_fcidump(std::ostream &os, const IntegralSet &set) {
    const int n = set.norb();
    os << fmt::format("&FCI NORB={},NELEC={},MS2={},\n", n, set.nelec(), set.ms2());
    os << " ORBSYM=";
    for (int p = 0; p < n; ++p)
        os << (p < static_cast<int>(set.orbsym.size()) ? set.orbsym[p] : 1) << ",";
    os << fmt::format("\n ISYM={},\n&END\n", set.isym);
    auto line = [&](double v, int i, int j, int k, int l) {
        os << fmt::format("{:24.15e}{:4d}{:4d}{:4d}{:4d}\n", v, i, j, k, l);
    };
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s <= r; ++s) {
                    if (pair_index(r, s) > pair_index(p, q))
                        continue;
                    const double v = set.eri(p, q, r, s);
                    if (v != 0.0)
                        line(v, p + 1, q + 1, r + 1, s + 1);
                }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            if (set.h(p, q) != 0.0)
                line(set.h(p, q), p + 1, q + 1, 0, 0);
    line(set.e_core(), 0, 0, 0, 0);
}

inline std::string write_fcidump(const IntegralSet &set) {
    std::ostringstream os;
    write_fcidump(os, set);
    return os.str();
}

/// Hubbard chain in the site basis: -t on nearest-neighbour bonds, U on
/// site. Defaults to half filling with the lowest |Sz|.
inline IntegralSet hubbard_model(int nsite, double t, double U, bool periodic,
                                 std::optional<int> nelec = std::nullopt) {
    if (nsite < 2)
        throw UsageError("hubbard_model needs at least 2 sites");
    const int ne = nelec.value_or(nsite);
    IntegralSet set(nsite, ne, ne % 2);
    for (int i = 0; i + 1 < nsite; ++i)
        set.set_h(i, i + 1, -t);
    // A 2-site ring would double-count its single bond.
    if (periodic && nsite > 2)
        set.set_h(0, nsite - 1, -t);
    for (int i = 0; i < nsite; ++i)
        set.set_eri(i, i, i, i, U);
    return set;
}

/// Direct sum of two systems with no interaction between them; orbitals of
/// `b` follow those of `a`.
inline IntegralSet compose_noninteracting(const IntegralSet &a, const IntegralSet &b) {
    const int na = a.norb(), nb = b.norb();
    IntegralSet out(na + nb, a.nelec() + b.nelec(), a.ms2() + b.ms2());
    out.set_e_core(a.e_core() + b.e_core());
    auto copy = [&](const IntegralSet &src, int off) {
        const int n = src.norb();
        for (int p = 0; p < n; ++p)
            for (int q = 0; q <= p; ++q)
                out.set_h(p + off, q + off, src.h(p, q));
        for (int p = 0; p < n; ++p)
            for (int q = 0; q <= p; ++q)
                for (int r = 0; r < n; ++r)
                    for (int s = 0; s <= r; ++s)
                        if (const double v = src.eri(p, q, r, s); v != 0.0)
                            out.set_eri(p + off, q + off, r + off, s + off, v);
    };
    copy(a, 0);
    copy(b, na);
    if (!a.orbsym.empty() || !b.orbsym.empty()) {
        out.orbsym.assign(na + nb, 1);
        std::copy(a.orbsym.begin(), a.orbsym.end(), out.orbsym.begin());
        std::copy(b.orbsym.begin(), b.orbsym.end(), out.orbsym.begin() + na);
    }
    return out;
}

/// Integrals in the rotated orbitals phi'_k = sum_p phi_p C(p, k).
inline IntegralSet transform_orbitals(const IntegralSet &set, const Eigen::MatrixXd &C) {
    const int n = set.norb();
    if (C.rows() != n || C.cols() != n)
        throw UsageError("orbital rotation has wrong shape");
    IntegralSet out(n, set.nelec(), set.ms2());
    out.set_e_core(set.e_core());
    out.orbsym = set.orbsym;
    out.isym = set.isym;
    const Eigen::MatrixXd h = C.transpose() * set.h1() * C;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            out.set_h(p, q, 0.5 * (h(p, q) + h(q, p)));

    // Four quarter transformations, O(n^5).
    const std::size_t n2 = static_cast<std::size_t>(n) * n;
    Eigen::MatrixXd g(n2, n2);
    const DenseEri dense = set.dense_eri();
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s)
                    g(p * n + q, r * n + s) = dense(p, q, r, s);
    auto transform_first = [&](const Eigen::MatrixXd &in) {
        // (pq|X) -> (kq|X): rows indexed by p*n+q.
        Eigen::MatrixXd res = Eigen::MatrixXd::Zero(n2, n2);
        for (int k = 0; k < n; ++k)
            for (int p = 0; p < n; ++p) {
                const double c = C(p, k);
                if (c == 0.0)
                    continue;
                for (int q = 0; q < n; ++q)
                    res.row(k * n + q) += c * in.row(p * n + q);
            }
        return res;
    };
    auto swap_pair = [&](const Eigen::MatrixXd &in) {
        // (pq|X) -> (qp|X)
        Eigen::MatrixXd res(n2, n2);
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
                res.row(q * n + p) = in.row(p * n + q);
        return res;
    };
    g = swap_pair(transform_first(swap_pair(transform_first(g))));
    g.transposeInPlace();
    g = swap_pair(transform_first(swap_pair(transform_first(g))));
    constexpr double zero_cut = 1e-15;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s <= r; ++s) {
                    if (pair_index(r, s) > pair_index(p, q))
                        continue;
                    const double v = g(r * n + s, p * n + q);
                    if (std::abs(v) > zero_cut)
                        out.set_eri(p, q, r, s, v);
                }
    return out;
}

/// Fixes the sign of each column so its largest-magnitude entry is positive.
inline void normalize_column_signs(Eigen::MatrixXd &C) {
    for (Eigen::Index k = 0; k < C.cols(); ++k) {
        Eigen::Index imax = 0;
        C.col(k).cwiseAbs().maxCoeff(&imax);
        if (C(imax, k) < 0)
            C.col(k) *= -1.0;
    }
}

/// Rotates to the eigenbasis of h1 (Hueckel orbitals for lattice models),
/// ordered by ascending one-electron energy.
inline IntegralSet to_one_body_eigenbasis(const IntegralSet &set) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(set.h1());
    Eigen::MatrixXd C = es.eigenvectors();
    normalize_column_signs(C);
    return transform_orbitals(set, C);
}

} // namespace mrrpa
