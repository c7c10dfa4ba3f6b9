#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "avatar/rng.hpp"
#include "avatar/toyworld.hpp"

namespace avatar::toyworld {

using nlohmann::json;

std::vector<SampleSpec> corpus_plan(const CorpusManifest& manifest) {
  if (manifest.count < 0) throw std::invalid_argument("corpus_plan: negative count");
  if (manifest.labels.empty()) throw std::invalid_argument("corpus_plan: empty label set");
  std::vector<SampleSpec> plan;
  plan.reserve(manifest.count);
  Rng rng(mix_seed(manifest.seed, 0xc0de));
  for (int i = 0; i < manifest.count; ++i) {
    SampleSpec spec;
    spec.seed = mix_seed(manifest.seed, 0x1000 + static_cast<std::uint64_t>(i));
    spec.label = manifest.labels[i % manifest.labels.size()];
    spec.identity.hue = rng.uniform();
    spec.identity.shape = static_cast<Shape>(rng.uniform_int(0, 2));
    spec.sync_flag = rng.uniform() < manifest.sync_fraction;
    plan.push_back(std::move(spec));
  }
  return plan;
}

ToySample make_sample(const SampleSpec& spec) {
  return make_sample(spec.seed, spec.label, spec.identity, spec.sync_flag);
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  json doc{{"schema_version", 1},
           {"seed", manifest.seed},
           {"count", manifest.count},
           {"sync_fraction", manifest.sync_fraction},
           {"labels", manifest.labels}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_manifest: cannot open " + path.string());
  out << doc.dump(2) << "\n";
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_manifest: cannot open " + path.string());
  json doc = json::parse(in);
  CorpusManifest m;
  m.seed = doc.at("seed").get<std::uint64_t>();
  m.count = doc.at("count").get<int>();
  m.sync_fraction = doc.at("sync_fraction").get<double>();
  m.labels = doc.at("labels").get<std::vector<std::string>>();
  return m;
}

namespace {

constexpr char kMagic[4] = {'T', 'O', 'Y', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("corpus: truncated file");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto n = read_pod<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("corpus: truncated string");
  return s;
}

}  // namespace

void write_corpus(const std::vector<ToySample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_corpus: cannot open " + path.string());
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod<std::uint64_t>(out, samples.size());
  for (const auto& s : samples) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.pixels.frames));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.pixels.height));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.pixels.width));
    write_string(out, s.label);
    write_pod<double>(out, s.identity.hue);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.identity.shape));
    write_pod<std::uint8_t>(out, s.sync_flag ? 1 : 0);
    write_string(out, s.transcript);
    out.write(reinterpret_cast<const char*>(s.pixels.values.data()),
              static_cast<std::streamsize>(s.pixels.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(s.envelope.data()),
              static_cast<std::streamsize>(s.envelope.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write_corpus: write failed");
}

std::vector<ToySample> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_corpus: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_corpus: bad magic in " + path.string());
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw std::runtime_error("read_corpus: unsupported container version");
  const auto count = read_pod<std::uint64_t>(in);
  std::vector<ToySample> samples;
  samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    ToySample s;
    const auto frames = read_pod<std::uint32_t>(in);
    const auto height = read_pod<std::uint32_t>(in);
    const auto width = read_pod<std::uint32_t>(in);
    s.label = read_string(in);
    s.identity.hue = read_pod<double>(in);
    s.identity.shape = static_cast<Shape>(read_pod<std::uint32_t>(in));
    s.sync_flag = read_pod<std::uint8_t>(in) != 0;
    s.transcript = read_string(in);
    s.pixels = Video(static_cast<int>(frames), static_cast<int>(height), static_cast<int>(width));
    in.read(reinterpret_cast<char*>(s.pixels.values.data()),
            static_cast<std::streamsize>(s.pixels.values.size() * sizeof(double)));
    s.envelope.resize(frames);
    in.read(reinterpret_cast<char*>(s.envelope.data()),
            static_cast<std::streamsize>(s.envelope.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_corpus: truncated sample");
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace avatar::toyworld
