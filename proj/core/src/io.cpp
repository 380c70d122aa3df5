#include "renki/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "renki/errors.hpp"

namespace renki::io {

using nlohmann::json;

int Vocabulary::add(const std::string& name) {
    const auto it = index.find(name);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(names.size());
    names.push_back(name);
    index.emplace(name, id);
    if (!categories.empty()) categories.push_back(-1);
    return id;
}

int Vocabulary::lookup(const std::string& name) const {
    const auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (const char c : line) {
        if (c == '\t') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    while (!fields.empty() && fields.back().empty()) fields.pop_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& what, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s +
                        "'");
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    return out;
}

TripleData load_triples_impl(const std::filesystem::path& path, const Vocabulary* entities,
                             const Vocabulary* relations) {
    auto in = open_input(path);
    TripleData data;
    if (entities) data.entities = *entities;
    if (relations) data.relations = *relations;
    const bool closed = entities != nullptr;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() < 3 || fields.size() > 5)
            throw DataError("line " + std::to_string(line_no) + ": expected 3-5 tab-separated " +
                            "columns, got " + std::to_string(fields.size()));
        Triple t;
        if (closed) {
            const int h = data.entities.lookup(fields[0]);
            const int r = data.relations.lookup(fields[1]);
            const int tl = data.entities.lookup(fields[2]);
            if (h < 0 || tl < 0)
                throw DataError("line " + std::to_string(line_no) + ": unknown entity id '" +
                                (h < 0 ? fields[0] : fields[2]) + "'");
            if (r < 0)
                throw DataError("line " + std::to_string(line_no) + ": unknown relation id '" +
                                fields[1] + "'");
            t.head = h;
            t.relation = r;
            t.tail = tl;
        } else {
            t.head = data.entities.add(fields[0]);
            t.relation = data.relations.add(fields[1]);
            t.tail = data.entities.add(fields[2]);
        }
        if (fields.size() >= 4) t.label = parse_double(fields[3], "label", line_no);
        if (fields.size() >= 5) {
            t.noise_scale = parse_double(fields[4], "sigma", line_no);
            if (*t.noise_scale < 0.0)
                throw DataError("line " + std::to_string(line_no) + ": sigma must be >= 0");
        }
        data.counts_per_relation[t.relation]++;
        data.triples.push_back(t);
    }
    return data;
}

}  // namespace

TripleData load_triples(const std::filesystem::path& path) {
    return load_triples_impl(path, nullptr, nullptr);
}

TripleData load_triples(const std::filesystem::path& path, const Vocabulary& entities,
                        const Vocabulary& relations) {
    return load_triples_impl(path, &entities, &relations);
}

void save_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                  const Vocabulary& entities, const Vocabulary& relations) {
    auto out = open_output(path);
    out << "# head\trelation\ttail\t[label]\t[sigma]\n";
    for (const auto& t : triples) {
        out << entities.names.at(static_cast<std::size_t>(t.head)) << '\t'
            << relations.names.at(static_cast<std::size_t>(t.relation)) << '\t'
            << entities.names.at(static_cast<std::size_t>(t.tail));
        if (t.label) out << '\t' << *t.label;
        if (t.noise_scale) {
            // columns are positional: sigma cannot be written without a label
            if (!t.label) throw DataError("triple has a noise scale but no label");
            out << '\t' << *t.noise_scale;
        }
        out << '\n';
    }
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    auto in = open_input(path);
    Vocabulary vocab;
    std::unordered_map<std::string, int> category_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (vocab.index.count(fields[0]))
            throw DataError("line " + std::to_string(line_no) + ": duplicate id '" + fields[0] +
                            "'");
        vocab.add(fields[0]);
        if (fields.size() >= 2) {
            const auto [it, inserted] =
                category_ids.emplace(fields[1], static_cast<int>(vocab.category_names.size()));
            if (inserted) vocab.category_names.push_back(fields[1]);
            vocab.categories.resize(vocab.names.size(), -1);
            vocab.categories.back() = it->second;
        }
    }
    if (!vocab.categories.empty()) vocab.categories.resize(vocab.names.size(), -1);
    return vocab;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    auto out = open_output(path);
    for (std::size_t i = 0; i < vocab.names.size(); ++i) {
        out << vocab.names[i];
        if (i < vocab.categories.size() && vocab.categories[i] >= 0)
            out << '\t' << vocab.category_names.at(static_cast<std::size_t>(vocab.categories[i]));
        out << '\n';
    }
}

Matrix load_embedding_file(const std::filesystem::path& path, const Vocabulary& entities) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;

    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream head(line);
        std::string tag;
        long d = 0;
        if (!(head >> tag >> d) || tag != "D" || d <= 0)
            throw DataError("line " + std::to_string(line_no) + ": expected header 'D <dim>'");
        dim = static_cast<std::size_t>(d);
        break;
    }
    if (dim == 0) throw DataError("embedding file has no 'D <dim>' header");

    Matrix vectors(entities.size(), dim);
    std::vector<char> seen(entities.size(), 0);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id;
        ss >> id;
        const int e = entities.lookup(id);
        if (e < 0) throw DataError("line " + std::to_string(line_no) + ": unknown entity '" + id + "'");
        auto row = vectors.row(static_cast<std::size_t>(e));
        for (std::size_t j = 0; j < dim; ++j)
            if (!(ss >> row[j]))
                throw DataError("line " + std::to_string(line_no) + ": expected " +
                                std::to_string(dim) + " values for '" + id + "'");
        double extra;
        if (ss >> extra)
            throw DataError("line " + std::to_string(line_no) + ": more than " +
                            std::to_string(dim) + " values for '" + id + "'");
        seen[static_cast<std::size_t>(e)] = 1;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw DataError("embedding file misses entity '" + entities.names[i] + "'");
    return vectors;
}

void save_embedding_file(const std::filesystem::path& path, const Matrix& vectors,
                         const Vocabulary& entities) {
    if (vectors.rows() != entities.size())
        throw ShapeError("vector rows != vocabulary size");
    auto out = open_output(path);
    out << "D " << vectors.cols() << '\n';
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
        out << entities.names[i];
        for (std::size_t j = 0; j < vectors.cols(); ++j) out << ' ' << vectors(i, j);
        out << '\n';
    }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    const auto trim = [](std::string s) {
        const auto from = s.find_first_not_of(" \t\r");
        const auto to = s.find_last_not_of(" \t\r");
        return from == std::string::npos ? std::string{} : s.substr(from, to - from + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> load_key_value_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_key_values(buf.str());
}

Vocabulary synthetic_entity_vocabulary(int entities) {
    Vocabulary v;
    v.categories.reserve(static_cast<std::size_t>(entities));
    v.category_names.push_back("all");
    for (int i = 0; i < entities; ++i) {
        v.add("e" + std::to_string(i));
        v.categories.push_back(0);
    }
    return v;
}

Vocabulary synthetic_relation_vocabulary(int relations) {
    Vocabulary v;
    for (int i = 0; i < relations; ++i) v.add("r" + std::to_string(i));
    return v;
}

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows) {
    if (!rows.is_array() || rows.empty()) return Matrix{};
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (rows[i].size() != m.cols()) throw DataError("ragged matrix in JSON");
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

json net_to_json(const FeedForwardNet& net) {
    json layers = json::array();
    for (const auto& layer : net.layers) {
        json l;
        l["weights"] = matrix_to_json(layer.weights);
        l["bias"] = layer.bias;
        l["relu"] = layer.relu;
        layers.push_back(std::move(l));
    }
    return layers;
}

FeedForwardNet net_from_json(const json& layers) {
    FeedForwardNet net;
    for (const auto& l : layers) {
        DenseLayer layer;
        layer.weights = matrix_from_json(l.at("weights"));
        layer.bias = l.at("bias").get<std::vector<double>>();
        layer.relu = l.at("relu").get<bool>();
        net.layers.push_back(std::move(layer));
    }
    validate(net);
    return net;
}

const char* transform_name(OutputTransform t) {
    return t == OutputTransform::Identity ? "identity" : "logistic";
}

OutputTransform transform_from_name(const std::string& s) {
    if (s == "identity") return OutputTransform::Identity;
    if (s == "logistic") return OutputTransform::Logistic;
    throw DataError("unknown output transform: " + s);
}

}  // namespace

void save_model(const std::filesystem::path& path, const ScoreModel& model) {
    json j;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                j["kind"] = "cnkg";
                j["rho"] = transform_name(m.rho);
                json nets = json::array();
                for (const auto& net : m.nets) nets.push_back(net_to_json(net));
                j["nets"] = std::move(nets);
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                j["kind"] = "ipnkg";
                j["rho"] = transform_name(m.rho);
                json heads = json::array(), tails = json::array();
                for (const auto& net : m.head_nets) heads.push_back(net_to_json(net));
                for (const auto& net : m.tail_nets) tails.push_back(net_to_json(net));
                j["head_nets"] = std::move(heads);
                j["tail_nets"] = std::move(tails);
            } else if constexpr (std::is_same_v<T, TranseModel>) {
                j["kind"] = "transe";
                j["relation_vectors"] = matrix_to_json(m.relation_vectors);
            } else if constexpr (std::is_same_v<T, MipModel>) {
                j["kind"] = "mip";
                j["relation_diagonals"] = matrix_to_json(m.relation_diagonals);
                j["bias"] = m.bias;
            } else {
                j["kind"] = "concat_linear";
                j["relation_vectors"] = matrix_to_json(m.relation_vectors);
            }
        },
        model);
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

ScoreModel load_model(const std::filesystem::path& path) {
    auto in = open_input(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("cannot parse model file " + path.string() + ": " + e.what());
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "cnkg") {
        CnkgModel m;
        m.rho = transform_from_name(j.at("rho").get<std::string>());
        for (const auto& net : j.at("nets")) m.nets.push_back(net_from_json(net));
        return m;
    }
    if (kind == "ipnkg") {
        IpNkgModel m;
        m.rho = transform_from_name(j.at("rho").get<std::string>());
        for (const auto& net : j.at("head_nets")) m.head_nets.push_back(net_from_json(net));
        for (const auto& net : j.at("tail_nets")) m.tail_nets.push_back(net_from_json(net));
        return m;
    }
    if (kind == "transe") return TranseModel{matrix_from_json(j.at("relation_vectors"))};
    if (kind == "mip")
        return MipModel{matrix_from_json(j.at("relation_diagonals")), j.at("bias").get<double>()};
    if (kind == "concat_linear")
        return ConcatLinearModel{matrix_from_json(j.at("relation_vectors"))};
    throw DataError("unknown model kind: " + kind);
}

void save_dataset(const std::filesystem::path& base, const SyntheticDataset& dataset) {
    const auto& truth = dataset.truth;
    const Vocabulary entities = synthetic_entity_vocabulary(truth.entities);
    const Vocabulary relations = synthetic_relation_vocabulary(truth.relations);
    save_triples(std::filesystem::path(base.string() + ".triples.tsv"), dataset.triples, entities,
                 relations);
    save_vocabulary(std::filesystem::path(base.string() + ".entities.tsv"), entities);
    save_vocabulary(std::filesystem::path(base.string() + ".relations.tsv"), relations);

    json j;
    j["kind"] = to_string(truth.kind);
    j["entities"] = truth.entities;
    j["dim"] = truth.dim;
    j["relations"] = truth.relations;
    j["bias"] = truth.bias;
    j["embeddings"] = matrix_to_json(truth.embeddings);
    j["relation_params"] = matrix_to_json(truth.relation_params);
    auto out = open_output(std::filesystem::path(base.string() + ".truth.json"));
    out << j.dump(2) << '\n';
}

SyntheticDataset load_dataset(const std::filesystem::path& base) {
    auto in = open_input(std::filesystem::path(base.string() + ".truth.json"));
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("cannot parse truth sidecar: " + std::string(e.what()));
    }
    SyntheticDataset ds;
    ds.truth.kind = truth_kind_from_string(j.at("kind").get<std::string>());
    ds.truth.entities = j.at("entities").get<int>();
    ds.truth.dim = j.at("dim").get<int>();
    ds.truth.relations = j.at("relations").get<int>();
    ds.truth.bias = j.at("bias").get<double>();
    ds.truth.embeddings = matrix_from_json(j.at("embeddings"));
    ds.truth.relation_params = matrix_from_json(j.at("relation_params"));

    const Vocabulary entities = synthetic_entity_vocabulary(ds.truth.entities);
    const Vocabulary relations = synthetic_relation_vocabulary(ds.truth.relations);
    ds.triples = load_triples(std::filesystem::path(base.string() + ".triples.tsv"), entities,
                              relations)
                     .triples;
    return ds;
}

}  // namespace renki::io
