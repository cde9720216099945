#pragma once

// Every CLI default in one place; README.md mirrors this table.

#include <cstdint>

#include "koopman/conditions.hpp"
#include "koopman/liealg.hpp"
#include "koopman/sampling.hpp"

namespace koopman::cli {

inline constexpr int kOrder = 5;                         // --k
inline constexpr int kDepth = kDefaultDepth;             // --depth (bracket word length)
inline constexpr int kDegreeCap = kDefaultDegreeCap;     // --degree-cap (field-side vectorization)
inline constexpr double kTol = kDefaultResonanceTol;     // --tol (resonance denominators)
inline constexpr double kRankTol = kDefaultRankTol;      // --rank-tol
inline constexpr int kContourNodes = 64;                 // contour quadrature nodes
inline constexpr double kRtol = 1e-9;                    // rk45 relative tolerance
inline constexpr double kAtol = 1e-11;                   // rk45 absolute tolerance
inline constexpr double kRk4Step = 1e-3;                 // --step with --method rk4
inline constexpr int kSamples = 100;                     // --samples
inline constexpr double kVerifyHorizon = 5.0;            // --horizon for verify/linearize
inline constexpr int kLoggedTimes = 20;                  // verification times per trajectory
inline constexpr double kSimulateHorizon = 5.0;          // --horizon for simulate
inline constexpr double kBilinearHorizon = 3.0;          // --horizon for simulate-bilinear
inline constexpr int kSimulationGrid = 300;              // error-curve intervals
inline constexpr int kSweepGridPoints = 9;               // --grid-points per axis
inline constexpr int kBilinearSamples = 64;              // --samples for bilinearize
inline constexpr int kDictionaryDegree = 2;              // --degree for gedmd
inline constexpr int kGedmdSamples = 200;                // --samples for gedmd
inline constexpr std::uint64_t kSeed = kDefaultSeed;     // --seed

}  // namespace koopman::cli
