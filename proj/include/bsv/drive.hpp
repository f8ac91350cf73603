#ifndef BSV_DRIVE_HPP
#define BSV_DRIVE_HPP

#include "bsv/quantum_field.hpp"

#include <limits>

namespace bsv
{

/// A classical driving field E(t), analytic in complex time away from its
/// branch cuts, together with a closed-form primitive A(t) = \int E dt.
class Drive
{
public:
  virtual ~Drive() = default;

  virtual ComplexScalar field(ComplexScalar t) const = 0;
  virtual ComplexScalar primitive(ComplexScalar t) const = 0;

  /// A(t) - A(t0). Overridden where a closed form avoids cancellation
  /// between two large primitives.
  virtual ComplexScalar primitive_difference(ComplexScalar t, ComplexScalar t0) const
  {
    return primitive(t) - primitive(t0);
  }

  /// Length of real-axis interval to the right of t that can be joined to
  /// points above t without crossing a branch cut.
  virtual double analytic_reach(double /*t*/) const
  {
    return std::numeric_limits<double>::infinity();
  }
};

/// E(t) = value for all t.
class ConstantDrive final : public Drive
{
public:
  explicit ConstantDrive(double value) : value_(value) {}

  ComplexScalar field(ComplexScalar) const override { return value_; }
  ComplexScalar primitive(ComplexScalar t) const override { return value_ * t; }
  ComplexScalar primitive_difference(ComplexScalar t, ComplexScalar t0) const override
  {
    return value_ * (t - t0);
  }

private:
  double value_;
};

/// E(t) = amplitude * cos(omega t). A negative amplitude pushes electrons
/// toward the surface at t = 0.
class CosineDrive final : public Drive
{
public:
  CosineDrive(double amplitude, double omega) : amplitude_(amplitude), omega_(omega) {}

  ComplexScalar field(ComplexScalar t) const override { return amplitude_ * std::cos(omega_ * t); }
  ComplexScalar primitive(ComplexScalar t) const override
  {
    return amplitude_ / omega_ * std::sin(omega_ * t);
  }
  ComplexScalar primitive_difference(ComplexScalar t, ComplexScalar t0) const override
  {
    return 2.0 * amplitude_ / omega_ * std::cos(0.5 * omega_ * (t + t0))
           * std::sin(0.5 * omega_ * (t - t0));
  }

private:
  double amplitude_;
  double omega_;
};

/// One Bohmian realization of the squeezed-vacuum field.
class RealizationDrive final : public Drive
{
public:
  explicit RealizationDrive(FieldRealization fr, double guard_radius = 0.0)
    : fr_(fr), guard_(guard_radius)
  {}

  ComplexScalar field(ComplexScalar t) const override { return e_field(fr_, t, guard_); }
  ComplexScalar primitive(ComplexScalar t) const override
  {
    return fr_.params.field_scale / fr_.params.omega * x_trajectory(fr_, t, guard_);
  }
  ComplexScalar primitive_difference(ComplexScalar t, ComplexScalar t0) const override
  {
    return fr_.params.field_scale / fr_.params.omega * x_difference(fr_, t, t0, guard_);
  }
  double analytic_reach(double t) const override
  {
    if (fr_.params.r == 0.0)
      return std::numeric_limits<double>::infinity();
    return edge_time(fr_.params, next_edge_index(fr_.params, t)) - t;
  }

  const FieldRealization& realization() const { return fr_; }

private:
  FieldRealization fr_;
  double guard_;
};

} // namespace bsv

#endif
