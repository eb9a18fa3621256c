#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_int.hpp>

#include "resinet/property.hpp"

namespace resinet {

enum class LpStatus { kFeasible, kInfeasible };

struct ReluPair {
  NeuronId neuron;
  int b_var = -1;  // pre-activation variable
  int f_var = -1;  // post-activation variable
};

// Certificate for an INFEASIBLE answer. The multipliers recombine the raw
// equality rows into one linear consequence; if pushing every variable to its
// favorable bound still cannot reach that consequence's right-hand side, the
// system is infeasible. Checkable without trusting any solver state: only the
// multipliers carry proof value, row_coeffs/rhs/var keep the solver's reduced
// row for diagnostics. An empty row with var >= 0 certifies a plain bound
// contradiction l(var) > u(var). Validation is sufficient, never necessary:
// a conclusion that fails it is re-decided in exact arithmetic before the
// solver returns it.
struct InfeasibilityCertificate {
  int var = -1;
  bool below_lower = true;
  Vec row_coeffs;
  double rhs = 0.0;
  Vec multipliers;
};

// Bounded-variable feasibility tableau: equalities T, bounds l/u, assignment
// alpha, relu pair set R. The solver repairs out-of-bounds basic variables
// with Bland-style smallest-index selection; relu pairs are carried but never
// enforced here (that is the search engine's job via bound assertions).
class Tableau {
 public:
  std::vector<int> input_vars;
  int output_var = -1;
  std::vector<ReluPair> relus;

  int add_variable(std::string name, double lo, double hi) {
    names_.push_back(std::move(name));
    lower_.push_back(lo);
    upper_.push_back(hi);
    alpha_.push_back(0.0);
    if (lo > hi + kEps) failed_ = true;
    basis_valid_ = false;
    solved_ = false;
    return static_cast<int>(names_.size()) - 1;
  }

  // Appends an equality row sum(coeffs[j] * x_j) = rhs. Short coefficient
  // vectors are zero-extended. Invalidates the basis.
  void add_row(Vec coeffs, double rhs) {
    coeffs.resize(names_.size(), 0.0);
    raw_rows_.push_back(std::move(coeffs));
    raw_rhs_.push_back(rhs);
    basis_valid_ = false;
    solved_ = false;
  }

  // Monotone tightening; returns false once the tableau is FAILED.
  bool assert_lower(int var, double value) {
    auto v = static_cast<size_t>(var);
    if (value > lower_[v]) {
      lower_[v] = value;
      solved_ = false;
    }
    if (lower_[v] > upper_[v] + kEps) failed_ = true;
    return !failed_;
  }

  bool assert_upper(int var, double value) {
    auto v = static_cast<size_t>(var);
    if (value < upper_[v]) {
      upper_[v] = value;
      solved_ = false;
    }
    if (lower_[v] > upper_[v] + kEps) failed_ = true;
    return !failed_;
  }

  bool failed() const { return failed_; }
  bool solved() const { return solved_; }
  int num_vars() const { return static_cast<int>(names_.size()); }
  int num_rows() const { return static_cast<int>(raw_rows_.size()); }
  double lower(int var) const { return lower_[static_cast<size_t>(var)]; }
  double upper(int var) const { return upper_[static_cast<size_t>(var)]; }
  const std::string& name(int var) const { return names_[static_cast<size_t>(var)]; }
  const Vec& assignment() const { return alpha_; }
  const InfeasibilityCertificate& certificate() const { return cert_; }
  void set_iteration_cap(int cap) { iteration_cap_ = cap; }

  const ReluPair* find_relu(int uid) const {
    for (const ReluPair& p : relus) {
      if (p.neuron.uid == uid) return &p;
    }
    return nullptr;
  }

  LpStatus solve() {
    if (failed_) {
      cert_ = bound_contradiction_cert_();
      status_ = LpStatus::kInfeasible;
      solved_ = true;
      return status_;
    }
    if (solved_) return status_;
    if (!basis_valid_) {
      init_basis_();
      if (solved_) return status_;  // inconsistent degenerate row
    }
    clamp_nonbasic_();
    recompute_basic_();

    const int cap =
        iteration_cap_ > 0 ? iteration_cap_ : 10000 + 100 * (num_vars() + num_rows());
    for (int iter = 0;; ++iter) {
      if (iter >= cap) return exact_decide_();

      // Bland: smallest-index basic variable out of bounds.
      int vrow = -1;
      int v = std::numeric_limits<int>::max();
      bool below = false;
      for (int r = 0; r < num_rows(); ++r) {
        const int b = basic_[static_cast<size_t>(r)];
        if (b < 0 || b >= v) continue;
        const auto bi = static_cast<size_t>(b);
        if (alpha_[bi] < lower_[bi] - kSolveTol) {
          v = b;
          vrow = r;
          below = true;
        } else if (alpha_[bi] > upper_[bi] + kSolveTol) {
          v = b;
          vrow = r;
          below = false;
        }
      }
      if (vrow < 0) {
        // The maintained reduction can drift away from the raw rows over many
        // pivots; a point that only satisfies the reduction proves nothing.
        if (!replay(alpha_, kLpTol)) return exact_decide_();
        status_ = LpStatus::kFeasible;
        solved_ = true;
        return status_;
      }

      // Bland: smallest-index nonbasic variable able to repair v.
      const Vec& row = M_[static_cast<size_t>(vrow)];
      int enter = -1;
      for (int j = 0; j < num_vars(); ++j) {
        const auto ji = static_cast<size_t>(j);
        if (in_basis_[ji] || j == v) continue;
        const double c = row[ji];
        if (std::abs(c) <= kPivotTol) continue;
        // Row reads v + sum(c_j * x_j) = rhs, so raising v means lowering the sum.
        const bool move_down = below ? (c > 0.0) : (c < 0.0);
        const bool can = move_down ? alpha_[ji] > lower_[ji] : alpha_[ji] < upper_[ji];
        if (can) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        cert_ = row_cert_(vrow, below);
        if (!validate_certificate(cert_)) return exact_decide_();
        status_ = LpStatus::kInfeasible;
        solved_ = true;
        return status_;
      }
      pivot_(vrow, enter, below);
    }
  }

  // Replays an assignment against the raw constraint list.
  bool replay(const Vec& alpha, double tol = kLpTol) const {
    if (alpha.size() != names_.size()) return false;
    for (size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] < lower_[j] - tol || alpha[j] > upper_[j] + tol) return false;
    }
    for (size_t r = 0; r < raw_rows_.size(); ++r) {
      double sum = -raw_rhs_[r];
      for (size_t j = 0; j < raw_rows_[r].size(); ++j) sum += raw_rows_[r][j] * alpha[j];
      if (std::abs(sum) > tol) return false;
    }
    return true;
  }

  // Independent certificate check. Any multiplier vector yields a valid
  // consequence sum((m.A)_j x_j) = m.b of the equality system, so the check
  // recombines the raw rows from scratch and runs the interval argument on
  // that; the solver's reduced row never enters. A coefficient below the
  // cancellation noise of its own constituent terms is treated as zero: such
  // a residue on an unbounded variable would otherwise blow the interval up
  // to [-inf, inf] and mask real infeasibility.
  bool validate_certificate(const InfeasibilityCertificate& c) const {
    if (c.row_coeffs.empty()) {
      if (c.var < 0) return false;
      const auto v = static_cast<size_t>(c.var);
      return lower_[v] > upper_[v] + kEps / 2;
    }
    if (c.multipliers.size() != raw_rows_.size()) return false;
    Vec comb(names_.size(), 0.0);
    Vec mag(names_.size(), 0.0);
    Vec colsum(names_.size(), 0.0);
    double rhs = 0.0;
    double rhs_mag = 1.0;
    double rhs_sum = 1.0;
    double mscale = 0.0;
    for (size_t r = 0; r < raw_rows_.size(); ++r) {
      const double m = c.multipliers[r];
      if (m == 0.0) continue;
      mscale = std::max(mscale, std::abs(m));
      rhs += m * raw_rhs_[r];
      rhs_mag += std::abs(m * raw_rhs_[r]);
      rhs_sum += std::abs(raw_rhs_[r]);
      for (size_t j = 0; j < raw_rows_[r].size(); ++j) {
        comb[j] += m * raw_rows_[r][j];
        mag[j] += std::abs(m * raw_rows_[r][j]);
        colsum[j] += std::abs(raw_rows_[r][j]);
      }
    }
    // A coefficient is explainable as noise when it fits the accumulation
    // error of its own terms plus the drift the multipliers themselves can
    // carry (a residue multiplier on an otherwise untouched column produces a
    // coefficient that IS its own magnitude, so the mag term alone is blind
    // to it).
    double lo = 0.0;
    double hi = 0.0;
    double bound_mag = 0.0;
    for (size_t j = 0; j < comb.size(); ++j) {
      const double cj = comb[j];
      if (std::abs(cj) <= kCertNoise * (mag[j] + mscale * colsum[j])) continue;
      const double lj = cj > 0.0 ? cj * lower_[j] : cj * upper_[j];
      const double hj = cj > 0.0 ? cj * upper_[j] : cj * lower_[j];
      lo += lj;
      hi += hj;
      if (std::isfinite(lj)) bound_mag = std::max(bound_mag, std::abs(lj));
      if (std::isfinite(hj)) bound_mag = std::max(bound_mag, std::abs(hj));
    }
    // The margin only needs to cover double accumulation error, which stays
    // around 1e-15 of the summed magnitudes; anything bigger would start to
    // swallow genuine threshold-tight margins.
    const double margin =
        kCertMargin * (rhs_mag + bound_mag) + kCertNoise * mscale * rhs_sum;
    return lo > rhs + margin || hi < rhs - margin;
  }

 private:
  static constexpr double kSolveTol = 1e-9;
  static constexpr double kPivotTol = 1e-11;
  static constexpr double kCertNoise = 1e-12;
  static constexpr double kCertMargin = 1e-13;

  std::vector<std::string> names_;
  Vec lower_, upper_, alpha_;
  std::vector<Vec> raw_rows_;
  Vec raw_rhs_;
  bool failed_ = false;

  bool basis_valid_ = false;
  std::vector<int> basic_;        // per row; -1 for redundant rows
  std::vector<char> in_basis_;    // per variable
  std::vector<Vec> M_;            // reduced rows
  Vec rhs_red_;
  std::vector<Vec> mult_;         // row multipliers over the raw rows
  int iteration_cap_ = 0;

  bool solved_ = false;
  LpStatus status_ = LpStatus::kFeasible;
  InfeasibilityCertificate cert_;

  InfeasibilityCertificate bound_contradiction_cert_() const {
    InfeasibilityCertificate c;
    for (size_t j = 0; j < names_.size(); ++j) {
      if (lower_[j] > upper_[j] + kEps) {
        c.var = static_cast<int>(j);
        break;
      }
    }
    return c;
  }

  InfeasibilityCertificate row_cert_(int vrow, bool below) const {
    InfeasibilityCertificate c;
    const auto r = static_cast<size_t>(vrow);
    c.var = basic_[r];
    c.below_lower = below;
    c.row_coeffs = M_[r];
    c.rhs = rhs_red_[r];
    c.multipliers = mult_[r];
    return c;
  }

  void init_basis_() {
    const auto m = raw_rows_.size();
    const auto n = names_.size();
    M_ = raw_rows_;
    for (Vec& row : M_) row.resize(n, 0.0);
    rhs_red_ = raw_rhs_;
    mult_.assign(m, Vec(m, 0.0));
    for (size_t r = 0; r < m; ++r) mult_[r][r] = 1.0;
    basic_.assign(m, -1);
    in_basis_.assign(n, 0);

    for (size_t r = 0; r < m; ++r) {
      size_t col = 0;
      double best = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (in_basis_[j]) continue;
        const double a = std::abs(M_[r][j]);
        if (a > best + kPivotTol) {
          best = a;
          col = j;
        }
      }
      if (best <= kPivotTol) {
        if (std::abs(rhs_red_[r]) > 1e-9) {
          InfeasibilityCertificate c;
          c.row_coeffs = M_[r];
          c.rhs = rhs_red_[r];
          c.multipliers = mult_[r];
          if (validate_certificate(c)) {
            cert_ = c;
            status_ = LpStatus::kInfeasible;
            solved_ = true;
          } else {
            exact_decide_();
          }
          return;
        }
        continue;  // redundant row
      }
      scale_row_(r, 1.0 / M_[r][col]);
      for (size_t r2 = 0; r2 < m; ++r2) {
        if (r2 == r || M_[r2][col] == 0.0) continue;
        sub_row_(r2, r, M_[r2][col]);
      }
      basic_[r] = static_cast<int>(col);
      in_basis_[col] = 1;
    }
    basis_valid_ = true;
  }

  void scale_row_(size_t r, double f) {
    for (double& x : M_[r]) x *= f;
    rhs_red_[r] *= f;
    for (double& x : mult_[r]) x *= f;
  }

  void sub_row_(size_t r2, size_t r, double f) {
    for (size_t j = 0; j < M_[r].size(); ++j) M_[r2][j] -= f * M_[r][j];
    rhs_red_[r2] -= f * rhs_red_[r];
    for (size_t j = 0; j < mult_[r].size(); ++j) mult_[r2][j] -= f * mult_[r][j];
  }

  void clamp_nonbasic_() {
    for (size_t j = 0; j < names_.size(); ++j) {
      if (in_basis_[j]) continue;
      if (alpha_[j] < lower_[j]) alpha_[j] = lower_[j];
      if (alpha_[j] > upper_[j]) alpha_[j] = upper_[j];
    }
  }

  void recompute_basic_() {
    for (size_t r = 0; r < M_.size(); ++r) {
      const int b = basic_[r];
      if (b < 0) continue;
      double val = rhs_red_[r];
      for (size_t j = 0; j < M_[r].size(); ++j) {
        if (static_cast<int>(j) == b) continue;
        if (M_[r][j] != 0.0) val -= M_[r][j] * alpha_[j];
      }
      alpha_[static_cast<size_t>(b)] = val;
    }
  }

  void pivot_(int vrow, int enter, bool below) {
    const auto r = static_cast<size_t>(vrow);
    const int leave = basic_[r];
    const auto li = static_cast<size_t>(leave);
    alpha_[li] = below ? lower_[li] : upper_[li];

    scale_row_(r, 1.0 / M_[r][static_cast<size_t>(enter)]);
    for (size_t r2 = 0; r2 < M_.size(); ++r2) {
      if (r2 == r) continue;
      const double f = M_[r2][static_cast<size_t>(enter)];
      if (f != 0.0) sub_row_(r2, r, f);
    }
    in_basis_[li] = 0;
    in_basis_[static_cast<size_t>(enter)] = 1;
    basic_[r] = enter;
    recompute_basic_();
  }

  // Referee for the float path: decides the raw system in exact rational
  // arithmetic whenever a float conclusion fails its own certification. Same
  // algorithm, no tolerances; Bland's smallest-index rules keep it
  // deterministic and cycle-free. A feasible run leaves the rounded rational
  // point in alpha, an infeasible one a certificate rounded from the exact
  // multipliers (which validates unless the margin itself is razor thin).
  LpStatus exact_decide_() {
    using Rat = boost::multiprecision::cpp_rational;
    const auto m = raw_rows_.size();
    const auto n = names_.size();

    std::vector<char> flo(n), fhi(n);
    std::vector<Rat> lo(n), hi(n), a(n);
    for (size_t j = 0; j < n; ++j) {
      flo[j] = std::isfinite(lower_[j]) ? 1 : 0;
      fhi[j] = std::isfinite(upper_[j]) ? 1 : 0;
      if (flo[j]) lo[j] = Rat(lower_[j]);
      if (fhi[j]) hi[j] = Rat(upper_[j]);
      if (flo[j] && fhi[j] && lo[j] > hi[j]) {
        cert_ = InfeasibilityCertificate{};
        cert_.var = static_cast<int>(j);
        status_ = LpStatus::kInfeasible;
        solved_ = true;
        return status_;
      }
      a[j] = flo[j] ? lo[j] : (fhi[j] ? hi[j] : Rat(0));
    }

    std::vector<std::vector<Rat>> M(m), mult(m);
    std::vector<Rat> rhs(m);
    for (size_t r = 0; r < m; ++r) {
      M[r].assign(n, Rat(0));
      for (size_t j = 0; j < raw_rows_[r].size(); ++j) M[r][j] = Rat(raw_rows_[r][j]);
      mult[r].assign(m, Rat(0));
      mult[r][r] = 1;
      rhs[r] = Rat(raw_rhs_[r]);
    }
    std::vector<int> basic(m, -1);
    std::vector<char> inb(n, 0);

    auto scale_row = [&](size_t r, size_t col) {
      const Rat p = M[r][col];
      for (Rat& x : M[r]) {
        if (x != 0) x /= p;
      }
      rhs[r] /= p;
      for (Rat& x : mult[r]) {
        if (x != 0) x /= p;
      }
    };
    auto sub_row = [&](size_t r2, size_t r, Rat f) {
      if (f == 0) return;
      for (size_t j = 0; j < n; ++j) {
        if (M[r][j] != 0) M[r2][j] -= f * M[r][j];
      }
      rhs[r2] -= f * rhs[r];
      for (size_t k = 0; k < m; ++k) {
        if (mult[r][k] != 0) mult[r2][k] -= f * mult[r][k];
      }
    };
    auto finish_infeasible = [&](size_t r, int var, bool below) {
      InfeasibilityCertificate c;
      c.var = var;
      c.below_lower = below;
      c.row_coeffs.resize(n);
      for (size_t j = 0; j < n; ++j) c.row_coeffs[j] = M[r][j].convert_to<double>();
      c.rhs = rhs[r].convert_to<double>();
      c.multipliers.resize(m);
      for (size_t k = 0; k < m; ++k) c.multipliers[k] = mult[r][k].convert_to<double>();
      cert_ = std::move(c);
      status_ = LpStatus::kInfeasible;
      solved_ = true;
      return status_;
    };
    auto recompute = [&] {
      for (size_t r = 0; r < m; ++r) {
        const int b = basic[r];
        if (b < 0) continue;
        Rat val = rhs[r];
        for (size_t j = 0; j < n; ++j) {
          if (static_cast<int>(j) == b) continue;
          if (M[r][j] != 0) val -= M[r][j] * a[j];
        }
        a[static_cast<size_t>(b)] = std::move(val);
      }
    };

    for (size_t r = 0; r < m; ++r) {
      size_t col = n;
      for (size_t j = 0; j < n; ++j) {
        if (!inb[j] && M[r][j] != 0) {
          col = j;
          break;
        }
      }
      if (col == n) {
        if (rhs[r] != 0) return finish_infeasible(r, -1, true);
        continue;  // redundant row
      }
      scale_row(r, col);
      for (size_t r2 = 0; r2 < m; ++r2) {
        if (r2 != r) sub_row(r2, r, M[r2][col]);
      }
      basic[r] = static_cast<int>(col);
      inb[col] = 1;
    }
    recompute();

    const int cap =
        iteration_cap_ > 0 ? iteration_cap_ : 10000 + 100 * (num_vars() + num_rows());
    for (int iter = 0;; ++iter) {
      if (iter >= cap) throw EngineError("lp solver iteration cap exceeded");

      int vrow = -1;
      int v = std::numeric_limits<int>::max();
      bool below = false;
      for (size_t r = 0; r < m; ++r) {
        const int b = basic[r];
        if (b < 0 || b >= v) continue;
        const auto bi = static_cast<size_t>(b);
        if (flo[bi] && a[bi] < lo[bi]) {
          v = b;
          vrow = static_cast<int>(r);
          below = true;
        } else if (fhi[bi] && a[bi] > hi[bi]) {
          v = b;
          vrow = static_cast<int>(r);
          below = false;
        }
      }
      if (vrow < 0) {
        for (size_t j = 0; j < n; ++j) {
          const double x = a[j].convert_to<double>();
          alpha_[j] = std::min(std::max(x, lower_[j]), upper_[j]);
        }
        status_ = LpStatus::kFeasible;
        solved_ = true;
        return status_;
      }

      const auto rr = static_cast<size_t>(vrow);
      int enter = -1;
      for (size_t j = 0; j < n; ++j) {
        if (inb[j]) continue;
        const Rat& cj = M[rr][j];
        if (cj == 0) continue;
        const bool move_down = below ? (cj > 0) : (cj < 0);
        const bool can = move_down ? (!flo[j] || a[j] > lo[j]) : (!fhi[j] || a[j] < hi[j]);
        if (can) {
          enter = static_cast<int>(j);
          break;
        }
      }
      if (enter < 0) return finish_infeasible(rr, v, below);

      const auto vi = static_cast<size_t>(v);
      a[vi] = below ? lo[vi] : hi[vi];
      scale_row(rr, static_cast<size_t>(enter));
      for (size_t r2 = 0; r2 < m; ++r2) {
        if (r2 != rr) sub_row(r2, rr, M[r2][static_cast<size_t>(enter)]);
      }
      inb[vi] = 0;
      inb[static_cast<size_t>(enter)] = 1;
      basic[rr] = enter;
      recompute();
    }
  }
};

// Builds the LP encoding of the verification query: one equality per neuron
// pre-activation, box bounds on inputs, x_f >= 0, and y >= c + kStrict.
inline Tableau encode(const Network& net, const Query& q) {
  validate_query(net, q);
  Tableau t;
  std::vector<int> prev_f;
  for (int i = 0; i < net.input_width; ++i) {
    prev_f.push_back(t.add_variable(cat("x", i), q.input_lower[static_cast<size_t>(i)],
                                    q.input_upper[static_cast<size_t>(i)]));
  }
  t.input_vars = prev_f;

  const int hidden_layers = net.depth() - 1;
  for (int l = 1; l <= hidden_layers; ++l) {
    const Layer& layer = net.layer(l);
    std::vector<int> cur_f;
    for (int k = 0; k < layer.width(); ++k) {
      const auto ki = static_cast<size_t>(k);
      const int b = t.add_variable(cat("b", l, "_", k), -kInf, kInf);
      const int f = t.add_variable(cat("f", l, "_", k), 0.0, kInf);
      Vec coeffs(static_cast<size_t>(t.num_vars()), 0.0);
      coeffs[static_cast<size_t>(b)] = 1.0;
      for (size_t p = 0; p < layer.weights[ki].size(); ++p) {
        coeffs[static_cast<size_t>(prev_f[p])] -= layer.weights[ki][p];
      }
      t.add_row(std::move(coeffs), layer.biases[ki]);
      t.relus.push_back(ReluPair{net.id_at(l, k), b, f});
      cur_f.push_back(f);
    }
    prev_f = std::move(cur_f);
  }

  const Layer& out = net.layers.back();
  const int y = t.add_variable("y", q.output_threshold + kStrict, kInf);
  Vec coeffs(static_cast<size_t>(t.num_vars()), 0.0);
  coeffs[static_cast<size_t>(y)] = 1.0;
  for (size_t p = 0; p < out.weights[0].size(); ++p) {
    coeffs[static_cast<size_t>(prev_f[p])] -= out.weights[0][p];
  }
  t.add_row(std::move(coeffs), out.biases[0]);
  t.output_var = y;
  return t;
}

}  // namespace resinet
