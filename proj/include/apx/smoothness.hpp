#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apx/fe_space.hpp"

namespace apx {

// Refinement factor of mesh diameters per generation.
inline double refinement_lambda(Rule r) { return r == Rule::red ? 2.0 : std::sqrt(2.0); }

struct SmoothnessParams {
  int r = 2;
  double alpha = 1.0;
  double p = 2.0;
  double q = 2.0;
  double lambda = 0.0;  // 0: take it from the refinement rule
  int J = 7;
};

struct SeminormValue {
  double value = 0;
  int truncation_J = 0;
  bool surrogate = false;
  double q = 2;
  std::vector<double> levels;         // omega_r(u, lambda^-j) or E(u, S_j)
  std::vector<double> contributions;  // lambda^{j alpha} * levels[j]
  std::vector<std::string> warnings;
};

// l^q (quasi-)norm of a finite sequence, max for q = inf.
double lq_aggregate(std::span<const double> c, double q);

// Union of closed triangles. Moduli are integrated over it and shifted
// segments must stay inside it.
class Region {
 public:
  explicit Region(std::vector<Affine> tris);
  static Region domain(const Forest& f);
  static Region cells(const Forest& f, std::span<const int> ids);

  std::span<const Affine> triangles() const { return tris_; }
  double area() const { return area_; }
  bool contains_segment(Point a, Point b) const;

 private:
  std::vector<Affine> tris_;
  std::vector<double> scale_;
  double area_ = 0;
};

struct ModulusOptions {
  int directions = 16;
  int magnitudes = 8;
  std::uint64_t seed = 1;
  int max_points = 20000;  // cap on integration points over G
  int quad_order = 2;
};

// omega_r(u, t, G)_p with the sup over |h| <= t sampled on a seeded star of
// directions and magnitudes; points whose segment [x, x + r h] leaves G drop out.
double modulus(const Field& u, int r, double t, double p, const Region& G, const ModulusOptions& o = {});
// Moduli at several t on one integration grid; each value is the running sup
// over all sampled shifts of length <= t, so the curve is nondecreasing.
std::vector<double> modulus_curve(const Field& u, int r, std::span<const double> ts, double p, const Region& G,
                                  const ModulusOptions& o = {});

// l^q aggregate of lambda^{j alpha} omega_r(u, lambda^-j, G)_p over j = 0..J.
SeminormValue besov_seminorm(const Field& u, const SmoothnessParams& s, const Region& G, const ModulusOptions& o = {});

// Uniformly refined partitions P_0, P_1, ... built on demand from a base.
// level() mutates the shared forest, so build levels before sharing the chain.
class UniformChain {
 public:
  explicit UniformChain(Partition base);
  const Partition& level(int j);
  double lambda() const { return refinement_lambda(levels_.front().rule()); }
  int built() const { return static_cast<int>(levels_.size()); }
  // Elements of level j (indices into the partition) inside the union of base cells G.
  std::vector<int> restrict_to(int j, std::span<const int> G);

 private:
  std::vector<Partition> levels_;
};

// |u|_{A^alpha_{p,q}(G)} truncated at J: l^q aggregate of lambda^{j alpha} E(u, S_j)_{L^p(G)}
// with S_j the degree-m space on level j (continuous, or broken for the barred classes).
// G lists base cells (empty: whole domain). E_j is exact for p = 2; otherwise
// min(surrogate, ||u||) and the value is flagged.
SeminormValue multilevel_seminorm(const Field& u, const SmoothnessParams& s, UniformChain& chain, int m,
                                  std::span<const int> G = {}, double p0 = -1,
                                  SpaceKind kind = SpaceKind::continuous);

// (lambda^{alpha q m} / (lambda^{alpha q} - 1))^{1/q}, lambda^{alpha m} for q = inf.
double inverse_bound(double alpha, double q, int level, double lambda);

// (sum_tau |tau|^{theta p / 2} ||u||^p_{L^p(tau)})^{1/p}, max form for p = inf.
double weighted_norm(const Field& u, const Partition& P, double theta, double p, int quad_order = 6);
std::vector<double> weighted_powers(const Field& u, const Partition& P, double theta, double p, int quad_order = 6);

// Discrete candidates for the K-functional between L^p and A^alpha_{p,p}:
// K(t) <= min_j E(u, S_j) + t |u_j|, u_j the level-j (near-)best approximation.
struct KCandidates {
  std::vector<double> error;     // E(u, S_j)_{L^p}
  std::vector<double> seminorm;  // |u_j|_{A^alpha_{p,p}}
};
KCandidates k_functional_candidates(const Field& u, double alpha, double p, UniformChain& chain, int m, int J);
double k_functional_upper(const KCandidates& k, double t);

}  // namespace apx
