#pragma once

// Core value types shared across the library.
//
// Conventions used everywhere:
//  - shot-noise units (SNU): vacuum quadrature variance = 1
//  - quadrature ordering (x1, p1, x2, p2) for two-mode covariance matrices
//  - entropies and information quantities in bits

#include <stdexcept>
#include <string>

namespace cvqkd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParams : Error { using Error::Error; };
struct AsymmetryError : Error { using Error::Error; };
struct NonPhysicalState : Error { using Error::Error; };
struct DecompositionError : Error { using Error::Error; };
struct TruncationError : Error { using Error::Error; };
struct WeightError : Error { using Error::Error; };
struct DegenerateCorrelation : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
struct MemoryBudgetExceeded : Error { using Error::Error; };
struct CalibrationError : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct NoPositiveRate : Error { using Error::Error; };
struct NeverSecure : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

enum class Detection { homodyne, heterodyne };
enum class Quadrature { x, p };

inline const char* to_string(Detection d) {
    return d == Detection::homodyne ? "homodyne" : "heterodyne";
}
inline const char* to_string(Quadrature q) {
    return q == Quadrature::x ? "x" : "p";
}

// Thermal-loss channel with trusted preparation noise and (for heterodyne)
// trusted detector efficiency/noise. Homodyne formulas do not use eta/xi_d;
// see absorb_detector() in keyrate.hpp for untrusted-detector reductions.
struct ChannelParams {
    double t = 1.0;       // transmittance, [0,1]
    double w_x = 1.0;     // Eve's thermal variance, x quadrature (SNU, >= 1)
    double w_p = 1.0;
    double xi_x = 0.0;    // trusted preparation noise (SNU, >= 0)
    double xi_p = 0.0;
    double eta = 1.0;     // detector efficiency, (0,1]
    double xi_d_x = 0.0;  // detector electronic noise (SNU, >= 0)
    double xi_d_p = 0.0;

    void validate() const {
        if (!(t >= 0.0 && t <= 1.0)) throw InvalidParams("transmittance must be in [0,1]");
        if (!(w_x >= 1.0 && w_p >= 1.0)) throw InvalidParams("thermal variance must be >= 1 SNU");
        if (!(xi_x >= 0.0 && xi_p >= 0.0)) throw InvalidParams("trusted noise must be >= 0");
        if (!(eta > 0.0 && eta <= 1.0)) throw InvalidParams("detector efficiency must be in (0,1]");
        if (!(xi_d_x >= 0.0 && xi_d_p >= 0.0)) throw InvalidParams("detector noise must be >= 0");
    }

    double w(Quadrature q) const { return q == Quadrature::x ? w_x : w_p; }
    double xi(Quadrature q) const { return q == Quadrature::x ? xi_x : xi_p; }
    double xi_d(Quadrature q) const { return q == Quadrature::x ? xi_d_x : xi_d_p; }
};

struct ModulationParams {
    double vmod_x = 0.0;  // Gaussian modulation variance (SNU, >= 0)
    double vmod_p = 0.0;
    double beta = 0.92;   // reconciliation efficiency, [0,1)

    void validate() const {
        if (!(vmod_x >= 0.0 && vmod_p >= 0.0)) throw InvalidParams("modulation variance must be >= 0");
        if (!(beta >= 0.0 && beta < 1.0)) throw InvalidParams("beta must be in [0,1)");
    }

    double vmod(Quadrature q) const { return q == Quadrature::x ? vmod_x : vmod_p; }
};

// Alice gains and Bob cut-offs. c_x/c_p apply to homodyne, c_rad to heterodyne.
struct FilterSettings {
    double g_x = 0.0;
    double g_p = 0.0;
    double c_x = 0.0;
    double c_p = 0.0;
    double c_rad = 0.0;

    void validate() const {
        if (g_x < 0 || g_p < 0 || c_x < 0 || c_p < 0 || c_rad < 0)
            throw InvalidParams("filter parameters must be >= 0");
    }

    double g(Quadrature q) const { return q == Quadrature::x ? g_x : g_p; }
    double c(Quadrature q) const { return q == Quadrature::x ? c_x : c_p; }
};

}  // namespace cvqkd
