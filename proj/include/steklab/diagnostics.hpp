#ifndef STEKLAB_DIAGNOSTICS_HPP
#define STEKLAB_DIAGNOSTICS_HPP

#include "steklab/greens.hpp"
#include "steklab/solver.hpp"

namespace steklab {

// E(u) = (1/2) u^T K u - lambda int_b a (cosh u - 1)
double energy(const Field& u, double lambda, const SpMat& K, const BoundaryMass& B,
              double guard = 700.0);

struct MeanSplit {
    Field u0;       // u minus the weighted boundary mean
    double s = 0;   // removed mean
    double defect = 0;  // |s - (1/2) log(int a e^{-u0} / int a e^{u0})|
};

MeanSplit mean_split(const Field& u, const BoundaryMass& B);

struct FluxPeak {
    int node = 0;
    Vec2 location;
    double t = 0;
    int sign = 0;
    double height = 0;           // |lambda sinh u| at the peak
    // Signed integral over the peak's lobe: the same-sign arc around the
    // peak. A pure 10%-of-peak window cuts a Lorentzian lobe at 4 atan(3)
    // (79.5% of its mass), so the lobe is what converges to +-2 pi; the
    // window-restricted core mass is kept alongside.
    double mass_unweighted = 0;
    double mass_weighted = 0;
    double mass_core_unweighted = 0;  // over the 10%-of-peak window only
    int arc_first = 0, arc_last = 0;  // boundary node ids (cyclic, inclusive)
};

struct FluxMeasure {
    Vec density;  // lambda sinh u at boundary nodes
    double total_abs_unweighted = 0;
    double total_abs_weighted = 0;
    double signed_unweighted = 0;
    double signed_weighted = 0;
    std::vector<FluxPeak> peaks;
    bool flagged_unconverged = false;
};

// Peaks are local maxima of |density| above 5x the median; the support arc of
// each peak is where |density| stays above 10% of the peak height.
FluxMeasure flux_measure(const Field& u, double lambda, const WeightField& a,
                         const BoundaryMass& B, bool converged = true);

struct PeakFit {
    Vec2 location;
    double t = 0;
    int sign = 0;
    double dist_to_predicted = 0;  // to the nearest stable critical point
    double mu_fit = 0;
    double mu_predicted = 0;       // from mu_parameters, matched by proximity
    double mu_gap = 0;             // relative gap
    double mass_unweighted = 0;
    double mass_weighted = 0;
};

struct ConcentrationRow {
    double lambda = 0;
    double energy = 0;
    double energy_over_log = 0;
    double total_abs_flux = 0;
    std::vector<PeakFit> peaks;
    bool fit_ok = false;  // false when fewer than two peaks were found
};

struct ConcentrationReport {
    std::vector<ConcentrationRow> rows;  // lambda decreasing
};

// Per branch point: peak locations, distances to the predicted concentration
// sites, and a one-parameter fit of the solution to the log-bubble profile
// over the arc |x - peak| <= 10 lambda.
ConcentrationReport concentration_report(const Branch& branch, const WeightField& a,
                                         const BoundaryCurve& curve, const GreenTable* table,
                                         const SpMat& K, const BoundaryMass& B,
                                         double lambda_max = 1e100);

} // namespace steklab

#endif
