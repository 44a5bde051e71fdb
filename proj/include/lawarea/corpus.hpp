#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lawarea {

using ClassId = int;

struct LawArea {
  std::string code;
  std::string display_name;
};

/// Closed label set. Classes are kept in alphabetical order of their codes and a
/// class id is the position in that order.
class LabelSchema {
 public:
  /// The 18 law areas of the petition dataset (CHI ... URB).
  static const LabelSchema& canonical();

  explicit LabelSchema(std::vector<LawArea> areas);

  std::size_t size() const noexcept { return areas_.size(); }
  const LawArea& at(ClassId id) const { return areas_.at(static_cast<std::size_t>(id)); }
  const std::string& code(ClassId id) const { return at(id).code; }
  const std::vector<LawArea>& areas() const noexcept { return areas_; }
  std::vector<std::string> codes() const;

  std::optional<ClassId> find(std::string_view code) const noexcept;
  /// Throws Error(UnknownLabel).
  ClassId index_of(std::string_view code) const;

  bool operator==(const LabelSchema&) const;

 private:
  std::vector<LawArea> areas_;
};

struct Document {
  std::string id;
  std::string text;
  std::optional<ClassId> label;

  bool operator==(const Document&) const = default;
};

struct Dataset {
  std::vector<Document> documents;
  LabelSchema schema = LabelSchema::canonical();

  std::size_t size() const noexcept { return documents.size(); }
  bool empty() const noexcept { return documents.empty(); }
  /// Per-class counts in schema order; unlabeled documents are not counted.
  std::vector<std::size_t> class_counts() const;
  /// Labels in document order. Throws Error(MissingField) on an unlabeled document.
  std::vector<ClassId> labels() const;
  std::vector<std::string> texts() const;
  Dataset subset(std::vector<std::size_t> indices) const;
};

enum class DatasetFormat { Csv, Jsonl };

DatasetFormat parse_format(std::string_view name);
DatasetFormat format_from_extension(const std::filesystem::path& path);

Dataset read_dataset(std::istream& in, DatasetFormat format, const LabelSchema& schema = LabelSchema::canonical());
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LabelSchema& schema = LabelSchema::canonical());
void write_dataset(std::ostream& out, const Dataset& ds, DatasetFormat format);
void save_dataset(const std::filesystem::path& path, const Dataset& ds, DatasetFormat format);

struct Split {
  Dataset train;
  Dataset test;
};

/// Stratified hold-out split. The overall test size is ceil(test_fraction * n);
/// each class keeps floor(count * n_train / n) training documents and the
/// remaining training slots go to the classes with the largest fractional
/// parts (ties by class id). Both halves keep the input document order.
Split stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Reduces every class to the size of the smallest class, sampling without replacement.
Dataset random_under_sample(const Dataset& ds, std::uint64_t seed);

}  // namespace lawarea
