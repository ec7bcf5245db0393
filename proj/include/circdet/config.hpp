#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "circdet/target_builder.hpp"

namespace circdet {

/// Tunables shared by the CLI subcommands. A config file holds `key = value`
/// lines ('#' starts a comment); keys are the member names below, pyramid is a
/// comma-separated list of grid sizes.
struct Settings {
  std::vector<int> pyramid{48, 24, 12, 6, 3, 1};
  double alpha = 0.7;
  double r_a = 1.5;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double conf_threshold = 0.5;
  double merge_iou = 0.5;
  double final_iou = 0.5;
  double iou_thresh = 0.5;
  double image_size = 384.0;

  PyramidSpec pyramid_spec() const;
};

/// Applies the config text on top of `base`. Throws InvalidConfig for unknown
/// keys or unparsable values.
Settings parse_settings(std::string_view text, Settings base = {});
Settings load_settings(const std::filesystem::path& path, Settings base = {});

std::vector<int> parse_int_list(std::string_view text);

}  // namespace circdet
