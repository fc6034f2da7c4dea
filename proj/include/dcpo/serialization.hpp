#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcpo/denoiser.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

/// Shortest round-tripping form is not required; 17 significant digits in
/// the classic locale always round-trips a double.
std::string format_real(double value);

/// Strict decimal parse of a whole token; throws ConfigError naming `what`.
double parse_real(const std::string& token, const std::string& what);

struct Checkpoint {
  DenoiserParams params;
  std::uint64_t seed = 0;
  int step = 0;
};

std::string write_checkpoint(const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& text);

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

/// One record per line: tag, id, then caption_w, caption_l, preferred latent,
/// less-preferred latent, preferred semantics, less-preferred semantics.
/// A leading "# dcpo-dataset k=K d=D" line fixes the widths.
std::string write_dataset(const std::vector<DualCaptionPair>& dataset);
std::vector<DualCaptionPair> read_dataset(const std::string& text);

void write_dataset_file(const std::filesystem::path& path, const std::vector<DualCaptionPair>& dataset);
std::vector<DualCaptionPair> read_dataset_file(const std::filesystem::path& path);

/// Original-mode records carry the prompt as both captions.
std::vector<DualCaptionPair> as_original_records(const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> pairs_from_original(const std::vector<DualCaptionPair>& records);

std::string overlap_csv(const OverlapReport& report);
OverlapReport read_overlap_csv(const std::string& text);

/// Header row plus rows of already formatted cells.
std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dcpo
