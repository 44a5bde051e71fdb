#include "lawarea/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "lawarea/error.hpp"
#include "lawarea/log.hpp"
#include "lawarea/random.hpp"

namespace lawarea {

using nlohmann::json;

const LabelSchema& LabelSchema::canonical() {
  static const LabelSchema schema({
      {"CHI", "Child and Youth"},
      {"CIV", "Civil"},
      {"CON", "Consumer"},
      {"CRI", "Criminal"},
      {"DIS", "Disability Rights"},
      {"DOM", "Domestic Violence"},
      {"EDU", "Education"},
      {"ELD", "Elder"},
      {"ELE", "Electoral"},
      {"ENV", "Environmental"},
      {"FAM", "Family"},
      {"HEA", "Health"},
      {"HUM", "Human Rights"},
      {"LAB", "Labor"},
      {"MIS", "Misconduct in Public Office"},
      {"REG", "Registration"},
      {"SOC", "Social Security"},
      {"URB", "Urban Planning"},
  });
  return schema;
}

LabelSchema::LabelSchema(std::vector<LawArea> areas) : areas_(std::move(areas)) {
  std::sort(areas_.begin(), areas_.end(), [](const LawArea& a, const LawArea& b) { return a.code < b.code; });
  for (std::size_t i = 1; i < areas_.size(); ++i) {
    if (areas_[i].code == areas_[i - 1].code) {
      throw Error(ErrorCode::InvalidArgument, "duplicate label code " + areas_[i].code);
    }
  }
  if (areas_.empty()) throw Error(ErrorCode::InvalidArgument, "empty label schema");
}

std::vector<std::string> LabelSchema::codes() const {
  std::vector<std::string> out;
  out.reserve(areas_.size());
  for (const auto& a : areas_) out.push_back(a.code);
  return out;
}

std::optional<ClassId> LabelSchema::find(std::string_view code) const noexcept {
  auto it = std::lower_bound(areas_.begin(), areas_.end(), code,
                             [](const LawArea& a, std::string_view c) { return a.code < c; });
  if (it == areas_.end() || it->code != code) return std::nullopt;
  return static_cast<ClassId>(it - areas_.begin());
}

ClassId LabelSchema::index_of(std::string_view code) const {
  if (auto id = find(code)) return *id;
  throw Error(ErrorCode::UnknownLabel, std::string(code));
}

bool LabelSchema::operator==(const LabelSchema& other) const {
  if (areas_.size() != other.areas_.size()) return false;
  for (std::size_t i = 0; i < areas_.size(); ++i) {
    if (areas_[i].code != other.areas_[i].code || areas_[i].display_name != other.areas_[i].display_name) {
      return false;
    }
  }
  return true;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(schema.size(), 0);
  for (const auto& d : documents) {
    if (d.label) ++counts[static_cast<std::size_t>(*d.label)];
  }
  return counts;
}

std::vector<ClassId> Dataset::labels() const {
  std::vector<ClassId> out;
  out.reserve(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (!documents[i].label) throw Error(ErrorCode::MissingField, "label (record " + std::to_string(i) + ")");
    out.push_back(*documents[i].label);
  }
  return out;
}

std::vector<std::string> Dataset::texts() const {
  std::vector<std::string> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.text);
  return out;
}

Dataset Dataset::subset(std::vector<std::size_t> indices) const {
  Dataset out{{}, schema};
  out.documents.reserve(indices.size());
  for (auto i : indices) out.documents.push_back(documents.at(i));
  return out;
}

DatasetFormat parse_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::Csv;
  if (name == "jsonl") return DatasetFormat::Jsonl;
  throw Error(ErrorCode::UnsupportedFormat, std::string(name));
}

DatasetFormat format_from_extension(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::Csv : DatasetFormat::Jsonl;
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

class DatasetBuilder {
 public:
  explicit DatasetBuilder(const LabelSchema& schema) : ds_{{}, schema} {}

  void add(std::size_t record, std::string id, std::optional<std::string> text, std::optional<std::string> label) {
    if (!text) throw Error(ErrorCode::MissingField, "text (record " + std::to_string(record) + ")");
    if (blank(*text)) throw Error(ErrorCode::MissingField, "empty text (record " + std::to_string(record) + ")");
    if (!ids_.insert(id).second) throw Error(ErrorCode::DuplicateId, id);
    std::optional<ClassId> cls;
    if (label) cls = ds_.schema.index_of(*label);
    ds_.documents.push_back({std::move(id), std::move(*text), cls});
  }

  Dataset finish() && {
    if (ds_.empty()) warn("dataset is empty");
    return std::move(ds_);
  }

 private:
  Dataset ds_;
  std::unordered_set<std::string> ids_;
};

Dataset read_jsonl(std::istream& in, const LabelSchema& schema) {
  DatasetBuilder builder(schema);
  std::string line;
  std::size_t line_no = 0;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + " is not an object");
    auto string_field = [&](const char* key) -> std::optional<std::string> {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) return std::nullopt;
      if (!it->is_string()) {
        throw Error(ErrorCode::MalformedFile, std::string("field '") + key + "' on line " + std::to_string(line_no));
      }
      return it->get<std::string>();
    };
    std::string id = string_field("id").value_or("doc-" + std::to_string(line_no));
    builder.add(record++, std::move(id), string_field("text"), string_field("label"));
  }
  return std::move(builder).finish();
}

// RFC 4180 record reader; returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  int c;
  while ((c = in.get()) != std::char_traits<char>::eof()) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(static_cast<char>(c));
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedFile, "unterminated quoted CSV field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

Dataset read_csv(std::istream& in, const LabelSchema& schema) {
  DatasetBuilder builder(schema);
  std::vector<std::string> header;
  if (!read_csv_record(in, header)) return std::move(builder).finish();
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto text_col = column("text");
  const auto label_col = column("label");
  const auto id_col = column("id");
  if (!text_col) throw Error(ErrorCode::MissingField, "CSV header lacks a 'text' column");

  std::vector<std::string> fields;
  std::size_t record = 0;
  while (read_csv_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedFile, "CSV record " + std::to_string(record) + " has " +
                                                std::to_string(fields.size()) + " fields, header has " +
                                                std::to_string(header.size()));
    }
    std::string id = id_col && !fields[*id_col].empty() ? fields[*id_col] : "doc-" + std::to_string(record + 2);
    std::optional<std::string> label;
    if (label_col && !fields[*label_col].empty()) label = fields[*label_col];
    builder.add(record, std::move(id), fields[*text_col], std::move(label));
    ++record;
  }
  return std::move(builder).finish();
}

std::string csv_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Dataset read_dataset(std::istream& in, DatasetFormat format, const LabelSchema& schema) {
  return format == DatasetFormat::Csv ? read_csv(in, schema) : read_jsonl(in, schema);
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, const LabelSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_dataset(in, format, schema);
}

void write_dataset(std::ostream& out, const Dataset& ds, DatasetFormat format) {
  if (format == DatasetFormat::Jsonl) {
    for (const auto& d : ds.documents) {
      json obj = {{"id", d.id}, {"text", d.text}};
      if (d.label) obj["label"] = ds.schema.code(*d.label);
      out << obj.dump() << '\n';
    }
    return;
  }
  out << "id,text,label\n";
  for (const auto& d : ds.documents) {
    out << csv_quote(d.id) << ',' << csv_quote(d.text) << ',';
    if (d.label) out << csv_quote(ds.schema.code(*d.label));
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_dataset(out, ds, format);
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.schema.size());
  for (std::size_t i = 0; i < ds.documents.size(); ++i) {
    const auto& label = ds.documents[i].label;
    if (!label) throw Error(ErrorCode::MissingField, "label (record " + std::to_string(i) + ")");
    by_class[static_cast<std::size_t>(*label)].push_back(i);
  }
  return by_class;
}

}  // namespace

Split stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "test_fraction must lie in (0, 1)");
  }
  auto by_class = indices_by_class(ds);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c].empty() && by_class[c].size() < 2) throw Error(ErrorCode::ClassTooSmall, ds.schema.code(c));
  }
  const std::size_t n = ds.size();
  if (n == 0) return {ds, ds};

  const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t n_train = n - std::min(n_test, n);

  // Largest-remainder apportionment of the training slots, in exact integer arithmetic.
  std::vector<std::size_t> train_quota(by_class.size());
  std::vector<std::size_t> remainder(by_class.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const std::size_t scaled = by_class[c].size() * n_train;
    train_quota[c] = scaled / n;
    remainder[c] = scaled % n;
    assigned += train_quota[c];
  }
  std::vector<std::size_t> order(by_class.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n_train && i < order.size(); ++i) {
    if (train_quota[order[i]] < by_class[order[i]].size()) {
      ++train_quota[order[i]];
      ++assigned;
    }
  }

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    Rng rng(derive_seed(seed, c));
    auto members = by_class[c];
    shuffle(std::span(members), rng);
    const std::size_t n_class_test = members.size() - train_quota[c];
    test_idx.insert(test_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_class_test));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_class_test), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(std::move(train_idx)), ds.subset(std::move(test_idx))};
}

Dataset random_under_sample(const Dataset& ds, std::uint64_t seed) {
  if (ds.empty()) throw Error(ErrorCode::EmptyDataset, "random_under_sample on an empty dataset");
  auto by_class = indices_by_class(ds);
  std::size_t smallest = ds.size();
  for (const auto& members : by_class) {
    if (!members.empty()) smallest = std::min(smallest, members.size());
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    Rng rng(derive_seed(seed, c));
    auto members = by_class[c];
    shuffle(std::span(members), rng);
    keep.insert(keep.end(), members.begin(),
                members.begin() + static_cast<std::ptrdiff_t>(std::min(smallest, members.size())));
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(std::move(keep));
}

}  // namespace lawarea
