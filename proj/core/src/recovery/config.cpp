#include "mixnet/recovery/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace mixnet::recovery {

std::string_view to_string(Task t) {
  switch (t) {
    case Task::denoise: return "denoise";
    case Task::sr: return "sr";
    case Task::csi: return "csi";
  }
  return "?";
}

std::string_view to_string(InputStrategy s) {
  switch (s) {
    case InputStrategy::constant: return "constant";
    case InputStrategy::random: return "random";
    case InputStrategy::meshgrid: return "meshgrid";
    case InputStrategy::estimated: return "estimated";
    case InputStrategy::learned: return "learned";
  }
  return "?";
}

std::string_view to_string(LossScheme s) { return s == LossScheme::single ? "single" : "multiple"; }

Task parse_task(std::string_view text) {
  if (text == "denoise") return Task::denoise;
  if (text == "sr") return Task::sr;
  if (text == "csi") return Task::csi;
  throw ConfigError("unknown task '" + std::string(text) + "'", std::string(text));
}

InputStrategy parse_input_strategy(std::string_view text) {
  for (auto s : {InputStrategy::constant, InputStrategy::random, InputStrategy::meshgrid, InputStrategy::estimated,
                 InputStrategy::learned}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown input strategy '" + std::string(text) + "'", std::string(text));
}

LossScheme parse_loss_scheme(std::string_view text) {
  if (text == "single") return LossScheme::single;
  if (text == "multiple") return LossScheme::multiple;
  throw ConfigError("unknown loss scheme '" + std::string(text) + "'", std::string(text));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, text), std::string(text));
  }
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text), std::string(text));
  }
  return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_double(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt::format("{}", v[i]);
  return out;
}

bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(text) + "'");
}

template <typename Parse>
auto wrap(std::string_view key, std::string_view value, Parse parse) {
  try {
    return parse(value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()), std::string(value));
  }
}

}  // namespace

const std::vector<std::string_view>& RecoveryConfig::keys() {
  static const std::vector<std::string_view> k{
      "task",       "input_strategy", "rho",        "beta",      "lambda",      "rank",       "blocks",
      "tau",        "gamma",          "loss_scheme", "lr",       "iterations",  "fidelity",   "sure_form",
      "sure_eps",   "div_probes",     "output_rule", "seed",     "arch",        "arch_layers", "arch_features",
      "arch_norm",  "cassi",      "d",              "sigma",      "noise_sigma", "threshold",
      "output_ema"};
  return k;
}

void RecoveryConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "task") task = wrap(key, value, parse_task);
  else if (key == "input_strategy") input_strategy = wrap(key, value, parse_input_strategy);
  else if (key == "rho") rho = parse_double(key, value);
  else if (key == "beta") beta = parse_double(key, value);
  else if (key == "lambda") net.lambda = parse_double(key, value);
  else if (key == "rank") net.rank = parse_uint(key, value);
  else if (key == "blocks") net.blocks = parse_uint(key, value);
  else if (key == "tau") tau = value.empty() ? std::vector<double>{} : parse_list(key, value);
  else if (key == "gamma") gamma = value.empty() ? std::vector<double>{} : parse_list(key, value);
  else if (key == "loss_scheme") loss_scheme = wrap(key, value, parse_loss_scheme);
  else if (key == "lr") lr = parse_double(key, value);
  else if (key == "iterations") iterations = parse_uint(key, value);
  else if (key == "fidelity") {
    if (value == "auto") fidelity.reset();
    else fidelity = wrap(key, value, loss::parse_fidelity);
  } else if (key == "sure_form") sure_form = wrap(key, value, loss::parse_sure_form);
  else if (key == "sure_eps") sure_eps = parse_double(key, value);
  else if (key == "div_probes") div_probes = parse_uint(key, value);
  else if (key == "output_rule") net.output_rule = wrap(key, value, net::parse_output_rule);
  else if (key == "seed") seed = parse_uint(key, value);
  else if (key == "arch") net.arch.kind = wrap(key, value, net::parse_abundance_kind);
  else if (key == "arch_layers") net.arch.num_layers = parse_uint(key, value);
  else if (key == "arch_features") net.arch.features = parse_uint(key, value);
  else if (key == "arch_norm") net.arch.normalize = wrap(key, value, parse_bool);
  else if (key == "cassi") cassi = wrap(key, value, forward::parse_cassi_variant);
  else if (key == "d") d = parse_uint(key, value);
  else if (key == "sigma") {
    if (value == "auto") sigma.reset();
    else sigma = parse_double(key, value);
  } else if (key == "noise_sigma") noise_sigma = parse_double(key, value);
  else if (key == "threshold") threshold = parse_double(key, value);
  else if (key == "output_ema") output_ema = parse_double(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key));
}

void RecoveryConfig::merge_text(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected key=value, got '{}'", line_no, line), std::string(line));
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void RecoveryConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str());
}

std::vector<double> RecoveryConfig::resolved_tau() const {
  if (!tau.empty()) {
    if (tau.size() == 1) return std::vector<double>(net.blocks, tau[0]);
    return tau;
  }
  std::vector<double> out(net.blocks, loss_scheme == LossScheme::multiple ? 1.0 : 0.0);
  if (!out.empty()) out.back() = 1.0;
  return out;
}

std::vector<double> RecoveryConfig::resolved_gamma() const {
  if (gamma.empty()) return std::vector<double>(net.blocks, 0.5);
  if (gamma.size() == 1) return std::vector<double>(net.blocks, gamma[0]);
  return gamma;
}

loss::Fidelity RecoveryConfig::resolved_fidelity() const {
  if (fidelity) return *fidelity;
  return task == Task::denoise ? loss::Fidelity::sure : loss::Fidelity::l2;
}

void RecoveryConfig::validate(std::size_t bands) const {
  auto fail = [](const std::string& msg, std::string token) { throw ConfigError(msg, std::move(token)); };
  if (!(rho > 0.0 && rho <= 1.0)) fail("rho must lie in (0, 1]", "rho");
  if (!(beta >= 0.0)) fail("beta must be >= 0", "beta");
  if (!(lr > 0.0)) fail("lr must be > 0", "lr");
  if (iterations == 0) fail("iterations must be >= 1", "iterations");
  if (!(sure_eps > 0.0)) fail("sure_eps must be > 0", "sure_eps");
  if (div_probes == 0) fail("div_probes must be >= 1", "div_probes");
  if (d == 0) fail("d must be >= 1", "d");
  if (sigma && !(*sigma >= 0.0)) fail("sigma must be >= 0", "sigma");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0", "noise_sigma");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)", "threshold");
  if (!(output_ema >= 0.0 && output_ema < 1.0)) fail("output_ema must lie in [0, 1)", "output_ema");
  if (net.blocks == 0) fail("blocks must be >= 1", "blocks");
  const auto t = resolved_tau();
  const auto g = resolved_gamma();
  if (t.size() != net.blocks) fail(fmt::format("tau has {} entries for {} blocks", t.size(), net.blocks), "tau");
  if (g.size() != net.blocks) fail(fmt::format("gamma has {} entries for {} blocks", g.size(), net.blocks), "gamma");
  try {
    net.validate(bands == 0 ? net.rank : bands);
  } catch (const std::invalid_argument& e) {
    fail(e.what(), "rank");
  }
}

std::string RecoveryConfig::to_text() const {
  std::string out;
  auto line = [&](std::string_view k, const std::string& v) { out += fmt::format("{}={}\n", k, v); };
  line("task", std::string(to_string(task)));
  line("input_strategy", std::string(to_string(input_strategy)));
  line("rho", fmt::format("{}", rho));
  line("beta", fmt::format("{}", beta));
  line("lambda", fmt::format("{}", net.lambda));
  line("rank", fmt::format("{}", net.rank));
  line("blocks", fmt::format("{}", net.blocks));
  line("tau", join(tau));
  line("gamma", join(gamma));
  line("loss_scheme", std::string(to_string(loss_scheme)));
  line("lr", fmt::format("{}", lr));
  line("iterations", fmt::format("{}", iterations));
  line("fidelity", fidelity ? std::string(loss::to_string(*fidelity)) : "auto");
  line("sure_form", std::string(loss::to_string(sure_form)));
  line("sure_eps", fmt::format("{}", sure_eps));
  line("div_probes", fmt::format("{}", div_probes));
  line("output_rule", std::string(net::to_string(net.output_rule)));
  line("seed", fmt::format("{}", seed));
  line("arch", std::string(net::to_string(net.arch.kind)));
  line("arch_layers", fmt::format("{}", net.arch.num_layers));
  line("arch_features", fmt::format("{}", net.arch.features));
  line("arch_norm", net.arch.normalize ? "true" : "false");
  line("cassi", std::string(forward::to_string(cassi)));
  line("d", fmt::format("{}", d));
  line("sigma", sigma ? fmt::format("{}", *sigma) : "auto");
  line("noise_sigma", fmt::format("{}", noise_sigma));
  line("threshold", fmt::format("{}", threshold));
  line("output_ema", fmt::format("{}", output_ema));
  return out;
}

}  // namespace mixnet::recovery
