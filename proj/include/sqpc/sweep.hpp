#pragma once

#include <optional>
#include <vector>

#include "sqpc/core_model.hpp"

namespace sqpc::sweep {

struct Trace {
    std::vector<double> V_g;   // V
    std::vector<double> G;     // G0
    double B = 0.0;
    TransportModel model = TransportModel::analytic;
    std::optional<int> device;
    double delta_0 = 0.0;
    double Z = 0.0;
    double temperature = 0.0;

    void validate() const;
};

struct FieldMap {
    std::vector<double> B;
    std::vector<Trace> traces;

    void validate() const;
};

struct Plateau {
    double v_start = 0.0;   // first sample of the run, in trace order
    double v_end = 0.0;
    double height = 0.0;
};

struct PlateauReport {
    std::vector<Plateau> plateaus;
    std::optional<double> V_p1, V_p2, H1, H2, G_off;
};

/// Worker threads for sweeps: SQPC_THREADS if set, else the hardware count.
unsigned thread_count();

/// Conductance of one (B, V_g) point. analytic: saddle fit plus BTK per mode;
/// bdg: lattice NS solve (one-interface devices only); series: lattice NS
/// solve per contact, composed in series for two-interface devices.
double point_conductance(const SimulationConfig& config, TransportModel model, double B, double v_g);

Trace gate_sweep(const SimulationConfig& config, TransportModel model, double B, const SweepRange& gate);

/// Row-major over B then V_g. Rows are filled in place, so the result does
/// not depend on how points are scheduled across threads.
FieldMap field_gate_map(const SimulationConfig& config, TransportModel model, const SweepRange& field,
                        const SweepRange& gate);

std::vector<Plateau> detect_plateaus(const Trace& trace, double slope_eps, double min_width);

/// First crossing of `threshold` walking from the open end (larger G) toward
/// the off end, linearly interpolated. Throws NotFoundError without a crossing.
double pinch_off(const Trace& trace, double threshold);

/// Mean G over samples with V_g in [v_lo, v_hi].
double off_conductance(const Trace& trace, double v_lo, double v_hi);

PlateauReport analyze_trace(const Trace& trace, const AnalysisParams& params);

}  // namespace sqpc::sweep
