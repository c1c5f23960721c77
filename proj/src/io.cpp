#include "alignlab/io.hpp"

#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <thread>

#include "alignlab/errors.hpp"

namespace alignlab {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSnapshotMagic = "EASNP1";
constexpr std::string_view kSymbolMagic = "EASYM1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.substr(0, magic.size()) != magic) fail("bad magic");
    pos_ = magic.size();
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  void finish() const {
    if (pos_ != bytes_.size()) fail("trailing bytes");
  }

 private:
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) fail("truncated");
  }
  [[noreturn]] void fail(const char* why) const { throw std::runtime_error(std::string(what_) + ": " + why); }

  std::string_view bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

TorusField read_field(Reader& in, std::size_t n) {
  TorusField::Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = in.f64();
  return TorusField(std::move(v));
}

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  // Unique per writer so concurrent writers of one path never share a temp file.
  static std::atomic<std::uint64_t> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 1000000) + "_" +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename into " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string encode_snapshot(const SimState& state) {
  const std::size_t n = state.size();
  std::string out;
  out.reserve(kSnapshotMagic.size() + 4 + 8 * (4 + 3 * n));
  out.append(kSnapshotMagic);
  put_u32(out, static_cast<std::uint32_t>(n));
  for (double v : {state.t, state.kappa, state.nu, state.p0}) put_f64(out, v);
  for (const auto* field : {&state.rho, &state.g, &state.u}) {
    for (std::size_t j = 0; j < n; ++j) put_f64(out, (*field)[j]);
  }
  return out;
}

SimState decode_snapshot(std::string_view bytes) {
  Reader in(bytes, "snapshot");
  in.expect_magic(kSnapshotMagic);
  const std::size_t n = in.u32();
  SimState state;
  state.t = in.f64();
  state.kappa = in.f64();
  state.nu = in.f64();
  state.p0 = in.f64();
  state.rho = read_field(in, n);
  state.g = read_field(in, n);
  state.u = read_field(in, n);
  in.finish();
  return state;
}

void write_snapshot(const fs::path& path, const SimState& state) { write_file_atomic(path, encode_snapshot(state)); }

SimState read_snapshot(const fs::path& path) {
  try {
    return decode_snapshot(read_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string encode_symbol(const SpectralSymbol& symbol) {
  std::string out(kSymbolMagic);
  put_u32(out, static_cast<std::uint32_t>(symbol.n));
  for (Eigen::Index k = 0; k < symbol.lambda.size(); ++k) put_f64(out, symbol.lambda[k]);
  return out;
}

SpectralSymbol decode_symbol(std::string_view bytes) {
  Reader in(bytes, "symbol");
  in.expect_magic(kSymbolMagic);
  SpectralSymbol symbol;
  symbol.n = in.u32();
  if (!is_power_of_two(symbol.n)) throw std::runtime_error("symbol: n is not a power of two");
  symbol.lambda.resize(static_cast<Eigen::Index>(symbol.n / 2 + 1));
  for (Eigen::Index k = 0; k < symbol.lambda.size(); ++k) symbol.lambda[k] = in.f64();
  in.finish();
  return symbol;
}

SymbolCache::SymbolCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path SymbolCache::path_for(const KernelSpec& spec, std::size_t n, double tol) const {
  return dir_ / (hex(kernel_hash(spec)) + "_n" + std::to_string(n) + "_tol" + format_double(tol) + ".easym");
}

SpectralSymbol SymbolCache::get_or_compute(const KernelSpec& spec, std::size_t n, double tol, std::size_t workers) {
  const auto path = path_for(spec, n, tol);
  if (fs::exists(path)) {
    auto symbol = decode_symbol(read_file(path));
    if (symbol.n == n) {
      symbol.kernel = describe(spec);
      symbol.tol = tol;
      return symbol;
    }
  }
  auto symbol = compute_symbol(spec, n, tol, workers);
  write_file_atomic(path, encode_symbol(symbol));
  return symbol;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string diagnostics_csv(const DiagnosticsRecord& record) {
  std::string out(kDiagnosticsHeader);
  out.push_back('\n');
  for (const auto& row : record.rows()) {
    for (double v : {row.t, row.min_rho, row.max_rho, row.max_abs_rhox, row.f_sup, row.q_sup, row.momentum,
                     row.g_residual, row.tail_fraction}) {
      out += format_double(v);
      out.push_back(',');
    }
    out += format_double(row.k0[0]) + ',' + format_double(row.k0[1]) + ',' + format_double(row.k0[2]) + '\n';
  }
  return out;
}

std::string assessment_csv(const KernelAssessment& a) {
  std::string out = "r,psi,M,hm_ratio,doubling_psi,doubling_M,ratio_m_over_M,r_gamma_M\n";
  for (std::size_t i = 0; i < a.r.size(); ++i) {
    for (const auto* col : {&a.r, &a.psi, &a.M, &a.hm_ratio, &a.doubling_psi, &a.doubling_M, &a.ratio_m_over_M}) {
      out += format_double((*col)[i]);
      out.push_back(',');
    }
    out += format_double(a.r_gamma_M[i]);
    out.push_back('\n');
  }
  return out;
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

nlohmann::json assessment_json(const KernelSpec& spec, const KernelAssessment& a) {
  nlohmann::json sandwich = nlohmann::json::array();
  for (const auto& p : a.sandwich) {
    sandwich.push_back({{"beta", p.beta},
                        {"upper_constant", number_or_null(p.upper_constant)},
                        {"lower_constant", number_or_null(p.lower_constant)},
                        {"upper_ok", p.upper_ok},
                        {"lower_ok", p.lower_ok}});
  }
  nlohmann::json flags = nlohmann::json::object();
  for (const auto& [name, ok] : a.flags()) flags[name] = ok;
  return {{"kernel", describe(spec)},
          {"grid", {{"points", a.r.size()}, {"r_min", a.r.front()}, {"r_max", a.r.back()}}},
          {"flags", flags},
          {"sandwich", sandwich},
          {"origin_mass", a.origin_mass ? nlohmann::json(*a.origin_mass) : nlohmann::json()},
          {"hormander_mikhlin", number_or_null(a.hormander_mikhlin)},
          {"doubling_psi_constant", number_or_null(a.doubling_psi_constant)},
          {"doubling_M_constant", number_or_null(a.doubling_M_constant)},
          {"ratio_violations", a.ratio_violations},
          {"r_gamma_violations", a.r_gamma_violations}};
}

}  // namespace alignlab
