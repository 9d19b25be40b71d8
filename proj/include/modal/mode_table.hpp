#pragma once

#include <filesystem>
#include <map>

#include "modal/types.hpp"

namespace modal {

/// JSON persistence for a ModeSet, with redundant Hz/seconds columns for
/// tool friendliness. Reading uses only the lossless per-sample fields, so
/// write -> read round-trips exactly.
struct ModeTableMeta {
    std::string source = "plain";
    std::map<std::string, double> params;
};

void write_mode_table(const std::filesystem::path& path, const ModeSet& modes,
                      const ModeTableMeta& meta = {});

ModeSet read_mode_table(const std::filesystem::path& path, ModeTableMeta* meta = nullptr);

/// Spreadsheet-friendly export of the same rows.
void write_mode_csv(const std::filesystem::path& path, const ModeSet& modes);

} // namespace modal
