#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fermidyn/types.hpp"

namespace fermidyn {

enum class Boundary { open, periodic };

std::string to_string(Boundary b);
Boundary parse_boundary(const std::string& text);

/// Finite one-body space: a 1-D chain of `sites` points with lattice
/// spacing `spacing`. Sites are indexed 0..sites-1; site i is mode e_{i+1}
/// in one-based notation.
class OneBodySpace {
 public:
  OneBodySpace(int sites, double spacing, Boundary boundary);

  int sites() const { return sites_; }
  double spacing() const { return spacing_; }
  Boundary boundary() const { return boundary_; }

  /// Signed displacement s_i - s_j, reduced to the minimal image on rings.
  int displacement(int si, int sj) const;
  /// Physical position of a site measured from the chain midpoint.
  double position(int site) const;

 private:
  int sites_;
  double spacing_;
  Boundary boundary_;
};

/// Pair potential V(k) tabulated over integer displacements
/// k in {-(M-1), ..., M-1}. Always real and symmetric.
class PotentialProfile {
 public:
  enum class Kind { box, gaussian, tabulated };

  static PotentialProfile box(int sites, double amplitude, int radius);
  static PotentialProfile gaussian(int sites, double amplitude, double width);
  /// Values keyed by displacement; missing entries are zero and a value for
  /// k also defines -k. Conflicting values for k and -k are rejected.
  static PotentialProfile tabulated(int sites, const std::map<int, double>& values);
  /// Plain text table, one "k value" pair per line; '#' starts a comment.
  static PotentialProfile from_file(int sites, const std::filesystem::path& path);
  /// Parses "box:A,r", "gauss:A,w", "file:PATH" or "none".
  static PotentialProfile parse(int sites, const std::string& spec);
  static PotentialProfile zero(int sites) { return tabulated(sites, {}); }

  Kind kind() const { return kind_; }
  int sites() const { return sites_; }
  double operator()(int displacement) const;
  /// Largest |k| with V(k) != 0, or -1 when the profile vanishes.
  int range() const;
  double max_abs() const;
  double min_value() const;
  bool is_zero() const { return range() < 0; }
  std::string describe() const { return description_; }

 private:
  PotentialProfile(Kind kind, int sites, std::vector<double> values, std::string description);

  Kind kind_;
  int sites_;
  std::vector<double> values_;  // values_[k + sites_ - 1] = V(k)
  std::string description_;
};

/// One-body wave function on the chain with optional declared compact
/// support [center - radius, center + radius].
struct Support {
  int center = 0;
  int radius = 0;
  int lo() const { return center - radius; }
  int hi() const { return center + radius; }
};

class OneBodyVector {
 public:
  OneBodyVector() = default;
  explicit OneBodyVector(Vector coefficients, std::optional<Support> support = std::nullopt);

  static OneBodyVector basis(int sites, int site);
  /// Builds a vector from coefficients on [center - radius, center + radius]
  /// and declares that support.
  static OneBodyVector localized(int sites, int center, std::span<const Complex> window);

  const Vector& coefficients() const { return coefficients_; }
  Complex operator[](int site) const { return coefficients_(site); }
  int size() const { return static_cast<int>(coefficients_.size()); }
  const std::optional<Support>& support() const { return support_; }
  double norm() const { return coefficients_.norm(); }
  /// Smallest interval containing every nonzero coefficient.
  std::optional<Support> actual_support() const;

 private:
  Vector coefficients_;
  std::optional<Support> support_;
};

Complex inner(const OneBodyVector& f, const OneBodyVector& g);  // <f, g>, antilinear in f

/// Second-difference kinetic operator -Laplacian: 2/a^2 on the diagonal and
/// -1/a^2 between neighbours (wrapped on rings, truncated on open chains).
RealMatrix kinetic_matrix(const OneBodySpace& space);

/// Harmonic trap x^2 / L^4 on the diagonal, x measured from the chain midpoint.
RealMatrix trap_matrix(const OneBodySpace& space, double trap_length);

/// (T_x f)(i) = f(i + x). Cyclic on rings. On open chains a declared support
/// that would leave the chain raises OpenBoundaryClipError; undeclared
/// coefficients shifted off the chain are dropped.
OneBodyVector translate(const OneBodySpace& space, const OneBodyVector& f, int x);

/// Distance between two supports (0 when they overlap).
int support_distance(const Support& a, const Support& b);

/// Diagonal multiplication rule for sum_{i != j} V(s_i - s_j).
class PairInteraction {
 public:
  PairInteraction(const OneBodySpace& space, PotentialProfile profile);

  /// V(s_i - s_j) with the minimal-image convention on rings.
  double pair(int si, int sj) const { return profile_(space_.displacement(si, sj)); }
  /// sum over ordered pairs i != j of V(s_i - s_j) for one configuration.
  double configuration_energy(std::span<const int> sites) const;

  const PotentialProfile& profile() const { return profile_; }
  const OneBodySpace& space() const { return space_; }

 private:
  OneBodySpace space_;
  PotentialProfile profile_;
};

}  // namespace fermidyn
