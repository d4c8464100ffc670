#ifndef PBE_TYPES_HPP
#define PBE_TYPES_HPP

#include <stdexcept>
#include <string>

namespace pbe {

/// Admissible particle-volume interval [v_min, v_max], 0 < v_min < v_max.
struct VolumeDomain {
    double v_min = 0.0;
    double v_max = 0.0;

    VolumeDomain() = default;
    VolumeDomain(double vmin, double vmax) : v_min(vmin), v_max(vmax) {
        if (!(vmin > 0.0) || !(vmax > vmin))
            throw std::invalid_argument("VolumeDomain: requires 0 < v_min < v_max");
    }

    double length() const { return v_max - v_min; }
    double center() const { return 0.5 * (v_min + v_max); }
    bool contains(double v) const { return v >= v_min && v <= v_max; }
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside the admissible volume interval.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Moment vector admits no (strictly) positive density; `order` names the
/// lowest moment order at which the defect was detected.
struct RealizabilityError : std::runtime_error {
    int order;
    RealizabilityError(int ord, const std::string& what)
        : std::runtime_error(what), order(ord) {}
};

/// Dual optimization did not converge; carries the last gradient norm.
struct OptimizationFailure : std::runtime_error {
    double gradient_norm;
    OptimizationFailure(double gnorm, const std::string& what)
        : std::runtime_error(what), gradient_norm(gnorm) {}
};

struct CflError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Explicit step produced an inadmissible state (e.g. negative cell value).
struct TimeStepError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pbe

#endif
