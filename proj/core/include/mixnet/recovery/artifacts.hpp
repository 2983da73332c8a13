#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mixnet/recovery/config.hpp"
#include "mixnet/recovery/recovery.hpp"

namespace mixnet::recovery {

struct ArtifactOptions {
  bool unmixing = false;  // also write thresholded maps of the last block
};

/// Writes a run's outputs under `dir`:
///   recovered.spc, recovered_rgb.png, log.csv (iter,loss,psnr), run.txt,
///   metrics.txt and metrics.csv (with a reference),
///   abundances/block{k}_comp{j}.{png,csv}, endmembers/block{k}.csv,
///   and with unmixing, threshold/comp{j}.{png,csv}.
/// Every file is first written under a temporary name; the renames happen
/// only after all writes succeeded. Returns the final paths.
std::vector<std::filesystem::path> write_artifacts(const RecoveryResult& result, const RecoveryConfig& config,
                                                   const std::filesystem::path& dir, ArtifactOptions options = {});

std::string log_csv(const std::vector<IterationRecord>& log);

}  // namespace mixnet::recovery
