#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "hslab/ensembles/ensemble.hpp"
#include "json.hpp"

namespace hslab {

/// Structured description of an ensemble: enough to regenerate every run.
struct EnsembleManifest {
  std::size_t N = 0;
  double ell = 1.0;
  int dim = 2;
  std::string density = "schwartz_reference";
  std::size_t runs = 0;
  std::uint64_t master_seed = 0;
};

inline nlohmann::json to_json(const EnsembleManifest& m) {
  return {{"N", m.N},         {"ell", m.ell},   {"d", m.dim},
          {"density", m.density}, {"runs", m.runs}, {"master_seed", m.master_seed}};
}

inline EnsembleManifest manifest_from_json(const nlohmann::json& j) {
  EnsembleManifest m;
  m.N = j.value("N", m.N);
  m.ell = j.value("ell", m.ell);
  m.dim = j.value("d", m.dim);
  m.density = j.value("density", m.density);
  m.runs = j.value("runs", m.runs);
  m.master_seed = j.value("master_seed", m.master_seed);
  density_kind_from_string(m.density);
  return m;
}

inline EnsembleManifest manifest_of(const EnsembleSample& e) {
  return {e.N, e.ell, e.density.dim, to_string(e.density.kind), e.runs.size(), e.master_seed};
}

/// Rebuilds the ensemble; example_family uses the manifest's N.
inline EnsembleSample ensemble_from_manifest(const EnsembleManifest& m, unsigned jobs = 1) {
  DensitySpec spec;
  switch (density_kind_from_string(m.density)) {
    case DensityKind::schwartz_reference: spec = DensitySpec::reference(m.dim); break;
    case DensityKind::gaussian_product: spec = DensitySpec::gaussian(m.dim, 1.0, 1.0); break;
    case DensityKind::example_family: spec = example_family(m.N, m.dim); break;
  }
  return make_ensemble(spec, m.N, m.ell, m.runs, m.master_seed, jobs);
}

/// CSV rows `t,statistic_name,estimate,stderr,runs`.
inline void write_statistic_header(std::ostream& os) { os << "t,statistic_name,estimate,stderr,runs\n"; }

inline void write_statistic_row(std::ostream& os, double t, const std::string& name,
                                const TupleStatistic& st) {
  os << detail::format_double(t) << ',' << name << ',' << detail::format_double(st.estimate) << ','
     << detail::format_double(st.stderr_) << ',' << st.samples << '\n';
}

}  // namespace hslab
