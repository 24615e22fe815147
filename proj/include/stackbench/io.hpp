#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "stackbench/dataset.hpp"

namespace stackbench {

/// Writes `contents` to a temporary sibling file then renames it over `path`,
/// so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Parses a header-first CSV. Column `label_column` becomes the labels, every
/// other column a feature in file order. Any empty, non-numeric or non-finite
/// cell, or a label outside {0,1}, raises LoadError naming the row and column.
Dataset parse_dataset_csv(std::string_view text, std::string_view label_column = "y");
Dataset load_csv(const std::filesystem::path& path, std::string_view label_column = "y");

/// Header x-names then the label column; doubles in round-trip form.
std::string dataset_to_csv(const Dataset& data, std::string_view label_column = "y");

/// Unlabeled feature matrix from CSV. If `drop_column` is present it is skipped.
Matrix load_feature_csv(const std::filesystem::path& path, std::string_view drop_column,
                        std::vector<std::string>* names = nullptr);

}  // namespace stackbench
