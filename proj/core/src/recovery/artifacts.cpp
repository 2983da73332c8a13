#include "mixnet/recovery/artifacts.hpp"

#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <stdexcept>
#include <system_error>

#include "mixnet/recovery/unmixing.hpp"
#include "mixnet/spectral/cube_io.hpp"
#include "mixnet/spectral/export.hpp"

namespace mixnet::recovery {

namespace fs = std::filesystem;

namespace {

class StagedWriter {
 public:
  explicit StagedWriter(fs::path dir) : dir_(std::move(dir)) {}
  StagedWriter(const StagedWriter&) = delete;
  StagedWriter& operator=(const StagedWriter&) = delete;

  ~StagedWriter() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged_) fs::remove(tmp, ec);
  }

  void add(const fs::path& relative, const std::function<void(const fs::path&)>& write) {
    const fs::path final_path = dir_ / relative;
    fs::create_directories(final_path.parent_path());
    fs::path tmp = final_path;
    tmp += ".tmp";
    staged_.emplace_back(tmp, final_path);
    write(tmp);
  }

  void add_text(const fs::path& relative, const std::string& text) {
    add(relative, [&](const fs::path& p) {
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      out << text;
      if (!out) throw std::runtime_error("cannot write " + p.string());
    });
  }

  std::vector<fs::path> commit() {
    std::vector<fs::path> out;
    for (const auto& [tmp, final_path] : staged_) {
      fs::rename(tmp, final_path);
      out.push_back(final_path);
    }
    committed_ = true;
    return out;
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> staged_;
  bool committed_ = false;
};

Eigen::MatrixXd plane_matrix(const spectral::SpectralCube& cube, std::size_t band) {
  const auto plane = cube.band(band);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(cube.height()), static_cast<Eigen::Index>(cube.width()));
  for (std::size_t i = 0; i < cube.height(); ++i) {
    for (std::size_t j = 0; j < cube.width(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = plane[i * cube.width() + j];
    }
  }
  return m;
}

}  // namespace

std::string log_csv(const std::vector<IterationRecord>& log) {
  std::string out = "iter,loss,psnr\n";
  for (const auto& r : log) {
    out += fmt::format("{},{:.17g},{}\n", r.iteration, r.loss, r.psnr ? metrics::format_value(*r.psnr) : "");
  }
  return out;
}

std::vector<fs::path> write_artifacts(const RecoveryResult& result, const RecoveryConfig& config, const fs::path& dir,
                                      ArtifactOptions options) {
  fs::create_directories(dir);
  StagedWriter w(dir);
  w.add("recovered.spc", [&](const fs::path& p) { spectral::write_cube(result.recovered, p); });
  w.add("recovered_rgb.png", [&](const fs::path& p) { spectral::export_rgb_png(result.recovered.clipped(), p); });
  w.add_text("log.csv", log_csv(result.log));

  std::string run = config.to_text();
  run += fmt::format("resolved_fidelity={}\n", loss::to_string(result.fidelity));
  run += fmt::format("sigma_used={:.17g}\n", result.sigma);
  run += fmt::format("sigma_source={}\n", result.sigma_estimated ? "estimated" : "config");
  w.add_text("run.txt", run);

  if (result.metrics) {
    w.add_text("metrics.txt", result.metrics->to_text());
    w.add_text("metrics.csv", metrics::MetricReport::csv_header() + "\n" + result.metrics->to_csv_row() + "\n");
  }

  for (std::size_t k = 0; k < result.abundances.size(); ++k) {
    const auto& a = result.abundances[k];
    for (std::size_t j = 0; j < a.bands(); ++j) {
      const std::string stem = fmt::format("abundances/block{}_comp{}", k + 1, j + 1);
      w.add(stem + ".png", [&](const fs::path& p) { spectral::export_band_png(a, j, p); });
      w.add(stem + ".csv", [&](const fs::path& p) { spectral::export_csv(plane_matrix(a, j), p); });
    }
    w.add(fmt::format("endmembers/block{}.csv", k + 1),
          [&](const fs::path& p) { spectral::export_csv(result.endmembers[k], p); });
  }

  if (options.unmixing && !result.abundances.empty()) {
    const auto& a = result.abundances.back();
    for (std::size_t j = 0; j < a.bands(); ++j) {
      const auto binary = threshold_abundance(a.band(j), config.threshold);
      std::vector<std::uint8_t> img(binary.size());
      Eigen::MatrixXd m(static_cast<Eigen::Index>(a.height()), static_cast<Eigen::Index>(a.width()));
      for (std::size_t p = 0; p < binary.size(); ++p) {
        img[p] = binary[p] ? 255 : 0;
        m(static_cast<Eigen::Index>(p / a.width()), static_cast<Eigen::Index>(p % a.width())) = binary[p];
      }
      const std::string stem = fmt::format("threshold/comp{}", j + 1);
      w.add(stem + ".png", [&](const fs::path& p) { spectral::write_gray_png(img, a.height(), a.width(), p); });
      w.add(stem + ".csv", [&](const fs::path& p) { spectral::export_csv(m, p); });
    }
  }
  return w.commit();
}

}  // namespace mixnet::recovery
