#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dftest {

struct PropertyReport {
  std::size_t cases = 0;
  std::size_t sequences_checked = 0;
  std::size_t masks_checked = 0;
  std::vector<std::string> violations;  // first few, with the case seed
  std::size_t violation_count = 0;
};

/// Random packing cases at L <= 256: short, long (with super-long windows),
/// grouped and SFT packing, each sequence checked for exact length, token
/// conservation, long-document filtering, window disjointness, and its mask
/// against a dense mask built independently from the segment list.
PropertyReport run_packing_properties(std::size_t cases, std::uint64_t seed);

}  // namespace dftest
