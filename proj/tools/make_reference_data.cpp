// Regenerates the pinned reference envelope and circuit files.
#include <filesystem>
#include <iostream>

#include "vdyn/envelope.hpp"
#include "vdyn/track.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_reference_data <repo-root>\n";
    return 2;
  }
  const std::filesystem::path root(argv[1]);
  std::filesystem::create_directories(root / "data");
  vdyn::save_envelope((root / "configs" / "reference_envelope.json").string(), vdyn::reference_envelope());
  vdyn::save_track((root / "data" / "reference_circuit.csv").string(), vdyn::reference_circuit());
  return 0;
}
