#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "alignlab/diagnostics.hpp"
#include "alignlab/dynamics.hpp"
#include "alignlab/kernels.hpp"
#include "alignlab/nonlocal_operator.hpp"

namespace alignlab {

/// Writes via a sibling temporary file and rename, so readers never see a
/// partial file. Throws std::runtime_error with the path on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// "EASNP1", n (u32 LE), t, kappa, nu, p0 (f64 LE), then rho, G, u.
std::string encode_snapshot(const SimState& state);
SimState decode_snapshot(std::string_view bytes);
void write_snapshot(const std::filesystem::path& path, const SimState& state);
SimState read_snapshot(const std::filesystem::path& path);

/// "EASYM1", n (u32 LE), then n/2 + 1 f64 LE symbol values.
std::string encode_symbol(const SpectralSymbol& symbol);
SpectralSymbol decode_symbol(std::string_view bytes);

/// Directory of symbol files keyed by (kernel hash, n, tol).
class SymbolCache {
 public:
  explicit SymbolCache(std::filesystem::path dir);
  std::filesystem::path path_for(const KernelSpec& spec, std::size_t n, double tol) const;
  SpectralSymbol get_or_compute(const KernelSpec& spec, std::size_t n, double tol, std::size_t workers);

 private:
  std::filesystem::path dir_;
};

/// Shortest round-trip decimal form.
std::string format_double(double v);

inline constexpr std::string_view kDiagnosticsHeader =
    "t,min_rho,max_rho,max_abs_rhox,f_sup,q_sup,momentum,g_residual,tail_fraction,k0_beta25,k0_beta50,k0_beta75";

std::string diagnostics_csv(const DiagnosticsRecord& record);
std::string assessment_csv(const KernelAssessment& assessment);
nlohmann::json assessment_json(const KernelSpec& spec, const KernelAssessment& assessment);

/// NaN and infinities become null.
nlohmann::json number_or_null(double v);

}  // namespace alignlab
