#pragma once

#include <stdexcept>

namespace figrelabel {

struct Point {
  double x = 0;
  double y = 0;

  bool operator==(const Point &) const = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }

/// Affine map in PostScript's row-vector convention: [x y 1] times
///   | a  b  0 |
///   | c  d  0 |
///   | tx ty 1 |
struct Matrix {
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;

  static Matrix identity() { return {}; }
  static Matrix translation(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
  static Matrix scaling(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
  /// Counter-clockwise rotation in degrees. Quarter turns are exact.
  static Matrix rotation(double degrees);

  double determinant() const { return a * d - b * c; }
  bool invertible() const;

  bool operator==(const Matrix &) const = default;
};

inline constexpr double kSingularThreshold = 1e-12;

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError() : std::runtime_error("matrix is not invertible") {}
};

Point transform_point(const Matrix &m, Point p);

/// Maps a delta through the linear part only.
Point transform_delta(const Matrix &m, Point delta);

/// Solves [a c; b d] r = delta. The translation part of `m` is never read.
Point idtransform_delta(const Matrix &m, Point delta);

Point itransform_point(const Matrix &m, Point p);

/// The matrix that applies `inner` first, then `outer`. This is how
/// `concat` updates the CTM: new CTM = inner x CTM.
Matrix concat_matrix(const Matrix &outer, const Matrix &inner);

Matrix invert(const Matrix &m);

/// Sine and cosine of an angle in degrees, exact at multiples of 90.
void sincos_degrees(double degrees, double &s, double &c);

}  // namespace figrelabel
