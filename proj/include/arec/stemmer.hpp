#pragma once

#include <string>
#include <string_view>

namespace arec {

// Porter (1980) suffix stripping on a single lowercase ASCII word.
// Words of length <= 2 are returned unchanged.
std::string porter_stem(std::string_view word);

// Lowercases a keyword identifier and stems each '_'-separated token, so
// multiword keywords such as "Genetic_Algorithms" become "genet_algorithm".
std::string stem_keyword(std::string_view keyword);

}  // namespace arec
