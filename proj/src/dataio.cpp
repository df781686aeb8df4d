#include "skewprune/dataio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace skewprune {

namespace {
constexpr int kDatasetSchemaVersion = 1;
constexpr int kModelSchemaVersion = 1;
}  // namespace

int group_from_fitzpatrick(int fitzpatrick) {
    if (fitzpatrick < 1 || fitzpatrick > 6)
        throw std::out_of_range("fitzpatrick type must be 1..6, got " + std::to_string(fitzpatrick));
    return fitzpatrick <= 3 ? 0 : 1;
}

void write_ppm(const Tensor& image, const std::string& path) {
    if (image.ndim() != 3 || image.dim(0) != 3)
        throw std::invalid_argument("write_ppm: image must be (3,H,W)");
    const int H = image.dim(1), W = image.dim(2);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "P6\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(W) * 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = image.data[static_cast<size_t>((c * H + y) * W + x)];
                v = std::clamp(v, 0.0f, 1.0f);
                row[static_cast<size_t>(x * 3 + c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

Tensor read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read image " + path);
    std::string magic;
    int W = 0, H = 0, maxval = 0;
    is >> magic >> W >> H >> maxval;
    if (magic != "P6" || maxval != 255 || W <= 0 || H <= 0)
        throw std::runtime_error("malformed PPM header in " + path);
    is.get();  // single whitespace after header
    std::vector<unsigned char> buf(static_cast<size_t>(W) * H * 3);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() != static_cast<std::streamsize>(buf.size()))
        throw std::runtime_error("truncated PPM data in " + path);
    Tensor img({3, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                img.data[static_cast<size_t>((c * H + y) * W + x)] =
                    static_cast<float>(buf[static_cast<size_t>((y * W + x) * 3 + c)]) / 255.0f;
    return img;
}

namespace {

struct LesionStyle {
    float r, g, b;       // base lesion color
    float freq;          // texture stripe frequency
    float stripe_amp;    // texture contrast
};

LesionStyle lesion_style(int cls) {
    // Colors sit outside both background tone ranges so the class signal
    // never requires the tone to decode.
    static const LesionStyle styles[] = {
        {0.32f, 0.18f, 0.12f, 0.0f, 0.00f},   // uniform dark brown
        {0.55f, 0.15f, 0.15f, 1.7f, 0.18f},   // striped red
        {0.20f, 0.30f, 0.45f, 3.1f, 0.14f},   // finely striped blue-gray
        {0.45f, 0.40f, 0.10f, 0.9f, 0.22f},   // coarse ochre
        {0.15f, 0.38f, 0.20f, 2.4f, 0.10f},   // green-gray
        {0.50f, 0.25f, 0.45f, 1.2f, 0.16f},   // violet
        {0.28f, 0.28f, 0.28f, 4.0f, 0.20f},   // high-frequency gray
        {0.60f, 0.35f, 0.20f, 0.5f, 0.25f},   // broad tan
    };
    return styles[static_cast<size_t>(cls) % 8];
}

Tensor render_sample(const SynthConfig& cfg, int cls, float tone, std::mt19937& rng) {
    const int S = cfg.image_size;
    Tensor img({3, S, S});
    std::uniform_real_distribution<float> noise(-0.03f, 0.03f);

    // background: flat tone per channel with slight warm tint and pixel noise
    const float tint[3] = {1.0f, 0.92f, 0.85f};
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x)
                img.data[static_cast<size_t>((c * S + y) * S + x)] =
                    std::clamp(tone * tint[c] + noise(rng), 0.0f, 1.0f);

    // elliptical lesion, area capped at lesion_area_frac of the image
    const float max_area = cfg.lesion_area_frac * static_cast<float>(S) * static_cast<float>(S);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    const float a = (0.6f + 0.4f * unit(rng)) * std::sqrt(max_area / 3.14159265f);
    const float b = max_area / (3.14159265f * a) * (0.7f + 0.3f * unit(rng));
    const float cx = a + unit(rng) * (static_cast<float>(S) - 2.0f * a);
    const float cy = b + unit(rng) * (static_cast<float>(S) - 2.0f * b);
    const float angle = unit(rng) * 3.14159265f;
    const float ca = std::cos(angle), sa = std::sin(angle);

    const LesionStyle st = lesion_style(cls);
    const float base[3] = {st.r, st.g, st.b};
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const float dx = static_cast<float>(x) - cx, dy = static_cast<float>(y) - cy;
            const float u = (dx * ca + dy * sa) / a;
            const float v = (-dx * sa + dy * ca) / std::max(b, 1.0f);
            if (u * u + v * v > 1.0f) continue;
            const float stripe = st.stripe_amp * std::sin(st.freq * (dx + dy));
            for (int c = 0; c < 3; ++c)
                img.data[static_cast<size_t>((c * S + y) * S + x)] =
                    std::clamp(base[c] + stripe + noise(rng), 0.0f, 1.0f);
        }
    return img;
}

}  // namespace

void generate_synthetic(const SynthConfig& cfg, const std::string& dir) {
    if (cfg.rho < 0.0f || cfg.rho > 1.0f)
        throw std::invalid_argument("generate_synthetic: rho must be in [0,1]");
    if (cfg.lesion_area_frac > 0.15f)
        throw std::invalid_argument("generate_synthetic: lesion area must stay <= 15% of the image");
    if (cfg.num_classes < 2) throw std::invalid_argument("generate_synthetic: need >= 2 classes");

    fs::create_directories(fs::path(dir) / "images");
    std::ofstream labels(fs::path(dir) / "labels.tsv");
    if (!labels) throw std::runtime_error("cannot write labels file in " + dir);
    labels << "image\tlabel\tfitzpatrick\tsplit\n";

    const std::vector<std::pair<std::string, int>> splits = {
        {"train", cfg.train}, {"val", cfg.val}, {"test", cfg.test}};
    int index = 0;
    for (const auto& [split, count] : splits) {
        for (int i = 0; i < count; ++i, ++index) {
            // per-image derived seed keeps generation order-independent
            std::mt19937 rng(cfg.seed * 2654435761u + static_cast<uint32_t>(index) * 40503u + 17u);
            std::uniform_real_distribution<float> unit(0.0f, 1.0f);
            std::uniform_int_distribution<int> cls_dist(0, cfg.num_classes - 1);

            const int group = unit(rng) < 0.5f ? 0 : 1;
            std::uniform_int_distribution<int> fitz_dist(group == 0 ? 1 : 4, group == 0 ? 3 : 6);
            const int fitz = fitz_dist(rng);
            const float tone = group == 0
                                   ? cfg.light_tone_lo + unit(rng) * (cfg.light_tone_hi - cfg.light_tone_lo)
                                   : cfg.dark_tone_lo + unit(rng) * (cfg.dark_tone_hi - cfg.dark_tone_lo);
            int cls = cls_dist(rng);
            if (unit(rng) < cfg.rho) cls = group == 0 ? 0 : cfg.num_classes - 1;

            Tensor img = render_sample(cfg, cls, tone, rng);
            char name[64];
            std::snprintf(name, sizeof(name), "img_%05d.ppm", index);
            write_ppm(img, (fs::path(dir) / "images" / name).string());
            labels << "images/" << name << "\t" << cls << "\t" << fitz << "\t" << split << "\n";
        }
    }
    labels.close();

    nlohmann::json manifest;
    manifest["schema_version"] = kDatasetSchemaVersion;
    manifest["kind"] = "synthetic_dataset";
    manifest["image_size"] = cfg.image_size;
    manifest["num_classes"] = cfg.num_classes;
    manifest["rho"] = cfg.rho;
    manifest["seed"] = cfg.seed;
    manifest["splits"] = {{"train", cfg.train}, {"val", cfg.val}, {"test", cfg.test}};
    std::ofstream mos(fs::path(dir) / "manifest.json");
    mos << manifest.dump(1) << "\n";
}

std::vector<Sample> load_dataset(const std::string& dir, const std::string& split) {
    const fs::path labels_path = fs::path(dir) / "labels.tsv";
    std::ifstream is(labels_path);
    if (!is) throw std::runtime_error("missing labels file " + labels_path.string());
    {
        const fs::path manifest_path = fs::path(dir) / "manifest.json";
        std::ifstream ms(manifest_path);
        if (ms) {
            nlohmann::json manifest = nlohmann::json::parse(ms);
            if (manifest.value("schema_version", -1) != kDatasetSchemaVersion)
                throw std::runtime_error(manifest_path.string() + ": unsupported dataset schema version");
        }
    }

    std::string header;
    std::getline(is, header);
    if (header != "image\tlabel\tfitzpatrick\tsplit")
        throw std::runtime_error(labels_path.string() + ": unexpected header '" + header + "'");

    std::vector<Sample> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string image, label_s, fitz_s, split_s;
        if (!std::getline(ls, image, '\t') || !std::getline(ls, label_s, '\t') ||
            !std::getline(ls, fitz_s, '\t') || !std::getline(ls, split_s))
            throw std::runtime_error(labels_path.string() + ": malformed row '" + line + "'");
        if (!split.empty() && split_s != split) continue;
        Sample s;
        s.name = image;
        s.label = std::stoi(label_s);
        if (s.label < 0) throw std::runtime_error("label out of range in " + labels_path.string());
        s.fitzpatrick = std::stoi(fitz_s);
        s.group = group_from_fitzpatrick(s.fitzpatrick);
        s.image = read_ppm((fs::path(dir) / image).string());
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Tensor> sample_images(const std::vector<Sample>& samples) {
    std::vector<Tensor> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(s.image);
    return out;
}

std::vector<int> sample_labels(const std::vector<Sample>& samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(s.label);
    return out;
}

namespace {

std::string blob_path_for(const std::string& manifest_path) {
    if (manifest_path.size() > 5 && manifest_path.ends_with(".json"))
        return manifest_path.substr(0, manifest_path.size() - 5) + ".bin";
    return manifest_path + ".bin";
}

}  // namespace

void save_model(const ModelSpec& model, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = "model";
    j["metadata"] = model.metadata;
    j["blob"] = fs::path(blob_path_for(path)).filename().string();

    std::vector<const Tensor*> order;
    auto& nodes = j["nodes"];
    nodes = nlohmann::json::array();
    int64_t offset = 0;
    auto& tensors = j["tensors"];
    tensors = nlohmann::json::array();
    for (const LayerNode& node : model.nodes) {
        nlohmann::json jn;
        jn["kind"] = layer_kind_name(node.kind);
        jn["attrs"] = node.attrs;
        jn["head_dims"] = node.head_dims;
        jn["residual_keep"] = node.residual_keep;
        jn["params"] = node.params;
        nodes.push_back(std::move(jn));
        for (const std::string& name : node.params) {
            const Tensor& t = model.weights.at(name);
            tensors.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
            order.push_back(&t);
            offset += t.numel();
        }
    }
    j["total_floats"] = offset;

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(1) << "\n";
    os.close();

    std::ofstream blob(blob_path_for(path), std::ios::binary);
    if (!blob) throw std::runtime_error("cannot write " + blob_path_for(path));
    for (const Tensor* t : order)
        blob.write(reinterpret_cast<const char*>(t->data.data()),
                   static_cast<std::streamsize>(t->data.size() * sizeof(float)));
}

ModelSpec load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read model manifest " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    if (j.value("schema_version", -1) != kModelSchemaVersion)
        throw std::runtime_error(path + ": unsupported model schema version");

    ModelSpec m;
    m.metadata = j.at("metadata");
    for (const auto& jn : j.at("nodes")) {
        LayerNode node;
        node.kind = layer_kind_from_name(jn.at("kind").get<std::string>());
        node.attrs = jn.at("attrs").get<std::map<std::string, int>>();
        node.head_dims = jn.at("head_dims").get<std::vector<int>>();
        node.residual_keep = jn.at("residual_keep").get<std::vector<int>>();
        node.params = jn.at("params").get<std::vector<std::string>>();
        m.nodes.push_back(std::move(node));
    }

    const fs::path blob_path = fs::path(path).parent_path() / j.at("blob").get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot read model blob " + blob_path.string());
    blob.seekg(0, std::ios::end);
    const int64_t bytes = blob.tellg();
    blob.seekg(0);
    const int64_t total = j.at("total_floats").get<int64_t>();
    if (bytes != total * static_cast<int64_t>(sizeof(float)))
        throw std::runtime_error(blob_path.string() + ": blob size mismatch (expected " +
                                 std::to_string(total * 4) + " bytes, found " + std::to_string(bytes) + ")");

    for (const auto& jt : j.at("tensors")) {
        Tensor t(jt.at("shape").get<std::vector<int>>());
        const int64_t offset = jt.at("offset").get<int64_t>();
        if (offset < 0 || offset + t.numel() > total)
            throw std::runtime_error(path + ": tensor offset/length out of blob range");
        blob.seekg(offset * static_cast<int64_t>(sizeof(float)));
        blob.read(reinterpret_cast<char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        m.weights[jt.at("name").get<std::string>()] = std::move(t);
    }
    validate(m);
    return m;
}

void write_predictions(const std::vector<EvalRecord>& records, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "true,pred,group\n";
    for (const EvalRecord& r : records)
        os << r.true_class << "," << r.pred_class << "," << r.group << "\n";
}

std::vector<EvalRecord> read_predictions(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read predictions file " + path);
    std::string header;
    std::getline(is, header);
    if (header != "true,pred,group" && header != "true,pred,group,fitzpatrick")
        throw std::runtime_error(path + ": unexpected header '" + header + "'");
    std::vector<EvalRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ','))
            throw std::runtime_error(path + ": malformed row '" + line + "'");
        EvalRecord r{std::stoi(a), std::stoi(b), std::stoi(c)};
        if (r.group != 0 && r.group != 1)
            throw std::runtime_error(path + ": group must be 0 or 1, got " + c);
        out.push_back(r);
    }
    return out;
}

}  // namespace skewprune
