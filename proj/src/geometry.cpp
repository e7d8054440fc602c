#include "figrelabel/geometry.hpp"

#include <cmath>
#include <numbers>

namespace figrelabel {

void sincos_degrees(double degrees, double &s, double &c) {
  double r = std::fmod(degrees, 360.0);
  if (r < 0) r += 360.0;
  if (r == 0.0) {
    s = 0; c = 1;
  } else if (r == 90.0) {
    s = 1; c = 0;
  } else if (r == 180.0) {
    s = 0; c = -1;
  } else if (r == 270.0) {
    s = -1; c = 0;
  } else {
    double rad = degrees * std::numbers::pi / 180.0;
    s = std::sin(rad);
    c = std::cos(rad);
  }
}

Matrix Matrix::rotation(double degrees) {
  double s, c;
  sincos_degrees(degrees, s, c);
  return {c, s, -s, c, 0, 0};
}

bool Matrix::invertible() const {
  return std::abs(determinant()) > kSingularThreshold;
}

Point transform_point(const Matrix &m, Point p) {
  return {m.a * p.x + m.c * p.y + m.tx, m.b * p.x + m.d * p.y + m.ty};
}

Point transform_delta(const Matrix &m, Point delta) {
  return {m.a * delta.x + m.c * delta.y, m.b * delta.x + m.d * delta.y};
}

Point idtransform_delta(const Matrix &m, Point delta) {
  double det = m.determinant();
  if (!(std::abs(det) > kSingularThreshold)) throw SingularMatrixError();
  return {(m.d * delta.x - m.c * delta.y) / det,
          (m.a * delta.y - m.b * delta.x) / det};
}

Point itransform_point(const Matrix &m, Point p) {
  return idtransform_delta(m, {p.x - m.tx, p.y - m.ty});
}

Matrix concat_matrix(const Matrix &outer, const Matrix &inner) {
  const Matrix &l = inner;
  const Matrix &r = outer;
  return {l.a * r.a + l.b * r.c,
          l.a * r.b + l.b * r.d,
          l.c * r.a + l.d * r.c,
          l.c * r.b + l.d * r.d,
          l.tx * r.a + l.ty * r.c + r.tx,
          l.tx * r.b + l.ty * r.d + r.ty};
}

Matrix invert(const Matrix &m) {
  double det = m.determinant();
  if (!(std::abs(det) > kSingularThreshold)) throw SingularMatrixError();
  Matrix r{m.d / det, -m.b / det, -m.c / det, m.a / det, 0, 0};
  r.tx = -(m.tx * r.a + m.ty * r.c);
  r.ty = -(m.tx * r.b + m.ty * r.d);
  return r;
}

}  // namespace figrelabel
