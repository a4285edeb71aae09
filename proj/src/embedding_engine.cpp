#include "avfm/embedding_engine.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "avfm/io_util.hpp"

namespace avfm {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'A', 'V', 'F', 'M', 'E', 'M', 'B', '1'};

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

static_assert(std::endian::native == std::endian::little,
              "bank I/O assumes a little-endian host");

}  // namespace

void EmbeddingBank::check() const {
  if (static_cast<Eigen::Index>(labels.size()) != vectors.rows())
    throw ValidationError("bank: label count " + std::to_string(labels.size()) +
                          " != vector count " + std::to_string(vectors.rows()));
  std::set<std::string> seen;
  for (const std::string& label : labels) {
    if (!seen.insert(label).second) throw ValidationError("bank: duplicate label " + label);
  }
  if (!vectors.array().isFinite().all())
    throw ValidationError("bank: non-finite entries");
}

void save_bank(const EmbeddingBank& bank, const std::string& path) {
  bank.check();
  std::string out(kMagic, sizeof(kMagic));
  append_u32_le(out, static_cast<std::uint32_t>(bank.count()));
  append_u32_le(out, static_cast<std::uint32_t>(bank.dim()));
  const size_t payload = sizeof(float) * static_cast<size_t>(bank.count()) * bank.dim();
  const size_t offset = out.size();
  out.resize(out.size() + payload);
  if (payload > 0) std::memcpy(out.data() + offset, bank.vectors.data(), payload);
  out += json(bank.labels).dump();
  write_file(path, out);
}

EmbeddingBank load_bank(const std::string& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 16 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("not an embedding bank (bad magic): " + path);
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  const std::uint32_t count = read_u32_le(bytes + 8);
  const std::uint32_t dim = read_u32_le(bytes + 12);
  const size_t payload = sizeof(float) * static_cast<size_t>(count) * dim;
  if (raw.size() < 16 + payload) throw IoError("truncated embedding bank: " + path);

  EmbeddingBank bank;
  bank.vectors.resize(count, dim);
  if (payload > 0) std::memcpy(bank.vectors.data(), raw.data() + 16, payload);

  json labels;
  try {
    labels = json::parse(raw.substr(16 + payload));
  } catch (const json::exception& e) {
    throw IoError("bank label block is not valid JSON: " + std::string(e.what()));
  }
  if (!labels.is_array()) throw IoError("bank label block must be a JSON array");
  for (const auto& l : labels) bank.labels.push_back(l.get<std::string>());
  bank.check();
  return bank;
}

std::vector<Ranking> classify(const VectorX<float>& vision_vec, const EmbeddingBank& text_bank,
                              int top_k) {
  if (text_bank.count() == 0) throw ValidationError("classify: empty text bank");
  if (top_k <= 0) throw ValidationError("classify: top_k must be positive");

  std::vector<Ranking> ranked(static_cast<size_t>(text_bank.count()));
  for (int i = 0; i < text_bank.count(); ++i) {
    ranked[static_cast<size_t>(i)] = {text_bank.labels[static_cast<size_t>(i)],
                                      cosine(vision_vec, text_bank.vectors.row(i).transpose())};
  }
  // stable: equal similarities keep bank order
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranking& a, const Ranking& b) { return a.similarity > b.similarity; });
  if (static_cast<int>(ranked.size()) > top_k) ranked.resize(static_cast<size_t>(top_k));
  return ranked;
}

SegmentationMap segment(const PatchGrid& grid, const EmbeddingBank& text_bank, int out_width,
                        int out_height) {
  if (text_bank.count() == 0) throw ValidationError("segment: empty text bank");
  if (grid.rows <= 0 || grid.cols <= 0 ||
      grid.features.rows() != static_cast<Eigen::Index>(grid.rows) * grid.cols)
    throw ValidationError("segment: patch grid shape mismatch");
  if (out_width <= 0 || out_height <= 0)
    throw ValidationError("segment: output size must be positive");

  std::vector<int> patch_class(static_cast<size_t>(grid.rows) * grid.cols, 0);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Eigen::Index row = static_cast<Eigen::Index>(r) * grid.cols + c;
      if (grid.features.row(row).norm() == 0.0f)
        throw ValidationError("segment: zero patch vector at (" + std::to_string(r) + "," +
                              std::to_string(c) + ")");
      int best = 0;
      double best_sim = -2.0;
      for (int i = 0; i < text_bank.count(); ++i) {
        const double s =
            cosine(grid.features.row(row).transpose(), text_bank.vectors.row(i).transpose());
        if (s > best_sim) {
          best_sim = s;
          best = i;
        }
      }
      patch_class[static_cast<size_t>(row)] = best;
    }
  }

  SegmentationMap map;
  map.width = out_width;
  map.height = out_height;
  map.class_indices.resize(static_cast<size_t>(out_width) * out_height);
  for (int y = 0; y < out_height; ++y) {
    const int pr = static_cast<int>(static_cast<std::int64_t>(y) * grid.rows / out_height);
    for (int x = 0; x < out_width; ++x) {
      const int pc = static_cast<int>(static_cast<std::int64_t>(x) * grid.cols / out_width);
      map.class_indices[static_cast<size_t>(y) * out_width + x] =
          patch_class[static_cast<size_t>(pr) * grid.cols + pc];
    }
  }
  return map;
}

double miou(const SegmentationMap& pred, const SegmentationMap& gt, int num_classes) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw ValidationError("miou: map dimensions differ");
  if (num_classes <= 0) throw ValidationError("miou: num_classes must be positive");

  std::vector<std::int64_t> tp(static_cast<size_t>(num_classes), 0);
  std::vector<std::int64_t> fp(static_cast<size_t>(num_classes), 0);
  std::vector<std::int64_t> fn(static_cast<size_t>(num_classes), 0);
  for (size_t i = 0; i < pred.class_indices.size(); ++i) {
    const int g = gt.class_indices[i];
    const int p = pred.class_indices[i];
    if (g == num_classes) continue;  // ignore index
    if (g < 0 || g > num_classes || p < 0 || p >= num_classes)
      throw ValidationError("miou: class index out of range at pixel " + std::to_string(i));
    if (p == g) {
      ++tp[static_cast<size_t>(g)];
    } else {
      ++fp[static_cast<size_t>(p)];
      ++fn[static_cast<size_t>(g)];
    }
  }

  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < num_classes; ++c) {
    const std::int64_t union_ = tp[static_cast<size_t>(c)] + fp[static_cast<size_t>(c)] +
                                fn[static_cast<size_t>(c)];
    if (union_ == 0) continue;  // class absent from both: excluded
    sum += static_cast<double>(tp[static_cast<size_t>(c)]) / static_cast<double>(union_);
    ++counted;
  }
  if (counted == 0) throw ValidationError("miou: no class has nonzero union");
  return sum / counted;
}

double acc_at_1(const std::vector<int>& preds, const std::vector<int>& gts) {
  if (preds.size() != gts.size()) throw ValidationError("acc@1: length mismatch");
  if (preds.empty()) throw ValidationError("acc@1: empty input");
  std::int64_t hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) hits += preds[i] == gts[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

void save_segmentation(const SegmentationMap& map, const std::vector<std::string>& labels,
                       const std::string& pgm_path) {
  if (map.width <= 0 || map.height <= 0) throw ValidationError("segmentation map is empty");
  const int maxval = static_cast<int>(labels.size());
  if (maxval < 1 || maxval > 65535)
    throw ValidationError("PGM maxval (class count) must lie in [1, 65535]");
  std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n" +
                    std::to_string(maxval) + "\n";
  for (int v : map.class_indices) {
    if (v < 0 || v > maxval)
      throw ValidationError("segmentation index " + std::to_string(v) + " exceeds maxval");
    if (maxval > 255) out.push_back(static_cast<char>((v >> 8) & 0xff));  // big-endian per PGM
    out.push_back(static_cast<char>(v & 0xff));
  }
  write_file(pgm_path, out);
  write_file(pgm_path + ".json", nlohmann::json(labels).dump(2) + "\n");
}

std::pair<SegmentationMap, std::vector<std::string>> load_segmentation(
    const std::string& pgm_path) {
  const std::string raw = read_file(pgm_path);
  size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < raw.size() && std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
    const size_t start = pos;
    while (pos < raw.size() && !std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
    return raw.substr(start, pos - start);
  };
  if (token() != "P5") throw IoError("not a P5 PGM: " + pgm_path);
  SegmentationMap map;
  int maxval = 0;
  try {
    map.width = std::stoi(token());
    map.height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw IoError("bad PGM header: " + pgm_path);
  }
  ++pos;  // single whitespace after maxval
  const int bytes = maxval > 255 ? 2 : 1;
  const size_t need = static_cast<size_t>(map.width) * map.height * bytes;
  if (raw.size() - pos < need) throw IoError("truncated PGM: " + pgm_path);
  map.class_indices.resize(static_cast<size_t>(map.width) * map.height);
  for (size_t i = 0; i < map.class_indices.size(); ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data() + pos + i * bytes);
    map.class_indices[i] = bytes == 2 ? (p[0] << 8) | p[1] : p[0];
  }

  std::vector<std::string> labels;
  const auto sidecar = nlohmann::json::parse(read_file(pgm_path + ".json"));
  for (const auto& l : sidecar) labels.push_back(l.get<std::string>());
  return {std::move(map), std::move(labels)};
}

}  // namespace avfm
