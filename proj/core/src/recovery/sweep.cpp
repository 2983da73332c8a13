#include "mixnet/recovery/sweep.hpp"

#include <fmt/format.h>

#include <exception>

namespace mixnet::recovery {

std::string_view to_string(Harness h) {
  switch (h) {
    case Harness::input_strategies: return "input_strategies";
    case Harness::abundance_arch: return "abundance_arch";
    case Harness::rank: return "rank";
    case Harness::blocks: return "blocks";
    case Harness::perturbation: return "perturbation";
  }
  return "?";
}

Harness parse_harness(std::string_view text) {
  for (auto h : {Harness::input_strategies, Harness::abundance_arch, Harness::rank, Harness::blocks,
                 Harness::perturbation}) {
    if (text == to_string(h)) return h;
  }
  throw ConfigError("unknown sweep harness '" + std::string(text) + "'", std::string(text));
}

namespace {

std::vector<std::string> split_values(std::string_view text) {
  std::vector<std::string> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string item(text.substr(0, comma));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<std::string> default_values(Harness h) {
  switch (h) {
    case Harness::input_strategies: return {"constant", "random", "meshgrid", "estimated", "learned"};
    case Harness::abundance_arch: return {"convolutional", "autoencoder", "resnet"};
    case Harness::rank: return {"3", "4", "5", "6", "7", "8", "9", "10", "15", "20"};
    case Harness::blocks: return {"1", "2", "3", "4", "5"};
    case Harness::perturbation: return {"0", "0.01", "0.03", "0.05", "0.08", "0.1"};
  }
  return {};
}

}  // namespace

std::vector<SweepCell> sweep_grid(Harness harness, const RecoveryConfig& base, std::string_view values) {
  auto grid = split_values(values);
  if (grid.empty()) grid = default_values(harness);
  std::vector<SweepCell> cells;
  for (const auto& v : grid) {
    switch (harness) {
      case Harness::input_strategies: {
        RecoveryConfig c = base;
        c.set("input_strategy", v);
        cells.push_back({"input_strategy=" + v, c});
        break;
      }
      case Harness::abundance_arch: {
        RecoveryConfig c = base;
        c.set("arch", v);
        if (c.net.arch.kind == net::AbundanceKind::autoencoder && c.net.arch.num_layers % 2 == 0) {
          c.net.arch.num_layers += 1;
        }
        cells.push_back({"arch=" + v, c});
        break;
      }
      case Harness::rank: {
        RecoveryConfig c = base;
        c.set("rank", v);
        cells.push_back({"rank=" + v, c});
        break;
      }
      case Harness::blocks: {
        for (auto scheme : {LossScheme::single, LossScheme::multiple}) {
          RecoveryConfig c = base;
          c.set("blocks", v);
          c.loss_scheme = scheme;
          c.tau.clear();
          if (c.gamma.size() > 1) c.gamma.clear();
          cells.push_back({fmt::format("blocks={};loss_scheme={}", v, to_string(scheme)), c});
        }
        break;
      }
      case Harness::perturbation: {
        RecoveryConfig c = base;
        c.set("beta", v);
        cells.push_back({"beta=" + v, c});
        break;
      }
    }
  }
  return cells;
}

std::vector<SweepRow> run_sweep(const std::vector<SweepCell>& cells, const ad::Tensor& y,
                                const forward::ForwardModel& model, const spectral::SpectralCube& reference) {
  std::vector<SweepRow> rows;
  for (const auto& cell : cells) {
    SweepRow row;
    row.label = cell.label;
    try {
      const RecoveryResult r = run_recovery(cell.config, y, model, &reference);
      row.metrics = *r.metrics;
      row.final_loss = r.log.back().loss;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "cell,status," + metrics::MetricReport::csv_header() + ",final_loss,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    }
    if (r.ok) {
      out += fmt::format("{},ok,{},{:.17g},\n", r.label, r.metrics.to_csv_row(), r.final_loss);
    } else {
      out += fmt::format("{},failed,,,,,,,{}\n", r.label, err);
    }
  }
  return out;
}

}  // namespace mixnet::recovery
