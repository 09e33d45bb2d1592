#pragma once

#include <string_view>

namespace sfa::embedded {

// Contents of data/meta_prompt.txt at build time.
std::string_view meta_prompt();
// Contents of data/lexicon/default.json at build time.
std::string_view default_lexicon_json();

}  // namespace sfa::embedded
