#pragma once

#include "structlim/structure.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace structlim {

/// Parses the `structure` / `graph` text formats. `origin` names the source
/// in error messages. Element tokens that all read as integers in [0, n) are
/// taken as indices; otherwise every token is an opaque label, mapped in
/// order of first appearance and kept for reports. The adj relation of a
/// graph signature is normalized symmetric and irreflexive on load.
Structure parse_structure_text(std::string_view text, const std::string& origin = "<input>");

/// Loads either format from disk. Throws file_error.
Structure load_structure(const std::filesystem::path& path);

/// Slurps a whole file; throws file_error when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes the `graph` shorthand (one `u v` line per edge, u < v).
void save_graph(const Structure& s, std::ostream& out);

struct Manifest {
    std::vector<std::filesystem::path> paths;
    std::vector<std::string> labels;  // parallel to paths
};

/// One `path [label]` entry per line, `#` comments. Relative paths resolve
/// against the manifest's own directory.
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace structlim
