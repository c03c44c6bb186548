#pragma once

#include <string>

#include "gmf/fsg.hpp"
#include "gmf/psg.hpp"

namespace gmf {

enum class DecompKind { kFsg, kPsg };

/// A decomposition loaded from disk; exactly one of the two payloads is
/// meaningful, selected by `kind`.
struct DecompCache {
  DecompKind kind = DecompKind::kFsg;
  FsgDecomposition fsg;
  PsgDecomposition psg;
};

/// Write a decomposition to a self-describing text file. Numbers are printed
/// with enough digits that loading reproduces every double bit-exactly. The
/// write goes to a temporary sibling first and is renamed into place, so a
/// crash never leaves a half-written file at `path`. Throws Error on I/O
/// failure.
void save_decomposition(const std::string& path, const FsgDecomposition& decomp);
void save_decomposition(const std::string& path, const PsgDecomposition& decomp);

/// Read a cache file written by save_decomposition. Rejects missing files,
/// unknown format versions, unknown keys, and malformed records with a
/// ParseError naming the offending line.
DecompCache load_decomposition(const std::string& path);

}  // namespace gmf
