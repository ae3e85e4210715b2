#include "rss_sentinel/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rss_sentinel::io {
namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

std::int64_t parse_int(std::string_view text, const std::string& source, std::size_t line) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError(source, line, "expected an integer, got '" + std::string(text) + "'");
    return v;
}

bool is_blank(std::string_view line) { return line.find_first_not_of(" \t\r") == std::string_view::npos; }

void expect_header(const std::string& got, std::string_view want, const std::string& source) {
    std::string trimmed = got;
    if (!trimmed.empty() && trimmed.back() == '\r') trimmed.pop_back();
    if (trimmed != want) throw ParseError(source, 1, "expected header '" + std::string(want) + "'");
}

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw std::invalid_argument(what + ": expected a nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument(what + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

template <typename Fixed>
void fill_fixed(Fixed& dst, const json& j, const std::string& what) {
    const Eigen::MatrixXd m = matrix_from_json(j, what);
    if (m.rows() != dst.rows() || m.cols() != dst.cols()) throw std::invalid_argument(what + ": wrong shape");
    dst = m;
}

json point_to_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument(field + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("cannot format number");
    return {buf, ptr};
}

double parse_double(std::string_view text, const std::string& source, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError(source, line, "expected a number, got '" + std::string(text) + "'");
    return v;
}

void write_trace_csv(const RssTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "timestamp_s,path_id,rss_dbm\n";
    for (const auto& s : trace.samples) out << s.timestamp_s << ',' << s.path_id << ',' << format_double(s.rss_dbm) << '\n';
}

void write_states_csv(const RssTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "timestamp_s,state_id\n";
    for (const auto& m : trace.true_state) out << m.timestamp_s << ',' << m.state_id << '\n';
}

RssTrace read_trace_csv(const std::filesystem::path& trace_path, const std::filesystem::path& states_path) {
    RssTrace trace;
    {
        const std::string src = trace_path.string();
        auto in = open_in(trace_path);
        std::string line;
        if (!std::getline(in, line)) throw ParseError(src, 1, "empty file");
        expect_header(line, "timestamp_s,path_id,rss_dbm", src);
        std::size_t ln = 1;
        int max_path = -1;
        while (std::getline(in, line)) {
            ++ln;
            if (is_blank(line)) continue;
            const auto f = split(line);
            if (f.size() != 3) throw ParseError(src, ln, "expected 3 fields");
            RssSample s{parse_int(f[0], src, ln), static_cast<int>(parse_int(f[1], src, ln)), parse_double(f[2], src, ln)};
            if (s.path_id < 0) throw ParseError(src, ln, "negative path_id");
            max_path = std::max(max_path, s.path_id);
            trace.samples.push_back(s);
        }
        trace.num_paths = max_path + 1;
    }
    if (!states_path.empty()) {
        const std::string src = states_path.string();
        auto in = open_in(states_path);
        std::string line;
        if (!std::getline(in, line)) throw ParseError(src, 1, "empty file");
        expect_header(line, "timestamp_s,state_id", src);
        std::size_t ln = 1;
        while (std::getline(in, line)) {
            ++ln;
            if (is_blank(line)) continue;
            const auto f = split(line);
            if (f.size() != 2) throw ParseError(src, ln, "expected 2 fields");
            const auto state = parse_int(f[1], src, ln);
            if (state < 0) throw ParseError(src, ln, "negative state_id");
            trace.true_state.push_back({parse_int(f[0], src, ln), static_cast<int>(state)});
        }
    }
    return trace;
}

void write_features_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "# layout=";
    for (std::size_t b = 0; b < kFeatureNames.size(); ++b) out << (b ? ";" : "") << kFeatureNames[b];
    out << ",paths=" << features.paths << ",window_len=" << features.window_len
        << ",normalized=" << (features.normalized ? 1 : 0) << '\n';
    const Eigen::Index d = features.values.cols();
    for (Eigen::Index c = 0; c < d; ++c) out << (c ? "," : "") << "f_" << c;
    if (features.has_labels()) out << ",label";
    out << '\n';
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        for (Eigen::Index c = 0; c < d; ++c) out << (c ? "," : "") << format_double(features.values(r, c));
        if (features.has_labels()) out << ',' << features.labels[static_cast<std::size_t>(r)];
        out << '\n';
    }
}

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t width = 0;
};

// Numeric table with an optional trailing `label` column.
Table read_table(std::istream& in, const std::string& src, std::size_t first_line, const std::string& prefix) {
    Table t;
    std::string line;
    std::size_t ln = first_line;
    if (!std::getline(in, line)) throw ParseError(src, ln, "missing column header");
    for (auto f : split(line)) t.header.emplace_back(f);
    const bool labeled = !t.header.empty() && t.header.back() == "label";
    const std::size_t width = t.header.size() - (labeled ? 1 : 0);
    t.width = width;
    for (std::size_t c = 0; c < width; ++c)
        if (t.header[c] != prefix + std::to_string(c))
            throw ParseError(src, ln, "expected column '" + prefix + std::to_string(c) + "'");
    while (std::getline(in, line)) {
        ++ln;
        if (is_blank(line)) continue;
        const auto f = split(line);
        if (f.size() != t.header.size())
            throw ParseError(src, ln, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                          std::to_string(f.size()));
        std::vector<double> row;
        for (std::size_t c = 0; c < width; ++c) row.push_back(parse_double(f[c], src, ln));
        t.rows.push_back(std::move(row));
        if (labeled) {
            const auto y = parse_int(f.back(), src, ln);
            if (y < 0) throw ParseError(src, ln, "negative label");
            t.labels.push_back(static_cast<int>(y));
        }
    }
    return t;
}

Eigen::MatrixXd to_matrix(const Table& t) {
    const std::size_t cols = t.width;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][c];
    return m;
}

}  // namespace

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
    const std::string src = path.string();
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# layout=", 0) != 0)
        throw ParseError(src, 1, "expected a '# layout=' metadata line");
    FeatureMatrix fm;
    bool have_paths = false;
    for (auto field : split(std::string_view(line).substr(2))) {
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = field.substr(0, eq);
        const auto value = field.substr(eq + 1);
        if (key == "paths") {
            fm.paths = static_cast<int>(parse_int(value, src, 1));
            have_paths = true;
        } else if (key == "window_len") {
            fm.window_len = static_cast<int>(parse_int(value, src, 1));
        } else if (key == "normalized") {
            fm.normalized = parse_int(value, src, 1) != 0;
        }
    }
    if (!have_paths) throw ParseError(src, 1, "metadata line lacks paths=");
    const Table t = read_table(in, src, 2, "f_");
    fm.values = to_matrix(t);
    fm.labels = t.labels;
    if (fm.values.cols() != kFeaturesPerPath * fm.paths)
        throw ParseError(src, 2, "column count is not 8 x paths");
    return fm;
}

void write_fused_csv(const FusionFeatureMatrix& fused, const std::filesystem::path& path) {
    auto out = open_out(path);
    const Eigen::Index d = fused.values.cols();
    const bool labeled = !fused.labels.empty();
    for (Eigen::Index c = 0; c < d; ++c) out << (c ? "," : "") << "x_" << c;
    if (labeled) out << ",label";
    out << '\n';
    for (Eigen::Index r = 0; r < fused.rows(); ++r) {
        for (Eigen::Index c = 0; c < d; ++c) out << (c ? "," : "") << format_double(fused.values(r, c));
        if (labeled) out << ',' << fused.labels[static_cast<std::size_t>(r)];
        out << '\n';
    }
}

FusionFeatureMatrix read_fused_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    const Table t = read_table(in, path.string(), 1, "x_");
    return {to_matrix(t), t.labels};
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
    const std::string src = path.string();
    auto in = open_in(path);
    std::vector<int> labels;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (is_blank(line)) continue;
        const auto f = split(line);
        const auto last = f.back();
        if (ln == 1 && !last.empty() && !std::isdigit(static_cast<unsigned char>(last.front())) && last.front() != '-')
            continue;
        const auto y = parse_int(last, src, ln);
        if (y < 0) throw ParseError(src, ln, "negative label");
        labels.push_back(static_cast<int>(y));
    }
    if (labels.empty()) throw ParseError(src, ln, "no labels");
    return labels;
}

void write_labels_csv(std::span<const int> labels, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "label\n";
    for (int y : labels) out << y << '\n';
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
        out << '\n';
    }
}

json environment_to_json(const EnvironmentSpec& env) {
    json j;
    j["ap_positions"] = json::array();
    for (auto p : env.ap_positions) j["ap_positions"].push_back(point_to_json(p));
    j["mp_positions"] = json::array();
    for (auto p : env.mp_positions) j["mp_positions"].push_back(point_to_json(p));
    j["areas"] = json::array();
    for (const auto& a : env.areas) j["areas"].push_back({{"centroid", point_to_json(a.centroid)}, {"radius_m", a.radius_m}});
    j["tx_power_dbm"] = env.tx_power_dbm;
    j["path_loss_exponent"] = env.path_loss_exponent;
    j["ref_distance_m"] = env.ref_distance_m;
    j["shadowing_sigma_db"] = env.shadowing_sigma_db;
    j["intrusion_atten_db"] = env.intrusion_atten_db;
    j["intrusion_sigma_db"] = env.intrusion_sigma_db;
    j["resolution_db"] = env.resolution_db;
    return j;
}

EnvironmentSpec environment_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("environment: expected an object");
    EnvironmentSpec env;
    auto points = [&](const char* key) {
        std::vector<Point2> out;
        if (!j.contains(key)) throw std::invalid_argument(std::string("environment.") + key + ": missing");
        for (const auto& p : j.at(key)) out.push_back(point_from_json(p, std::string("environment.") + key));
        return out;
    };
    env.ap_positions = points("ap_positions");
    env.mp_positions = points("mp_positions");
    if (j.contains("areas"))
        for (const auto& a : j.at("areas"))
            env.areas.push_back({point_from_json(a.at("centroid"), "environment.areas.centroid"), a.at("radius_m").get<double>()});
    auto number = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = j.at(key).get<double>();
    };
    number("tx_power_dbm", env.tx_power_dbm);
    number("path_loss_exponent", env.path_loss_exponent);
    number("ref_distance_m", env.ref_distance_m);
    number("shadowing_sigma_db", env.shadowing_sigma_db);
    number("intrusion_atten_db", env.intrusion_atten_db);
    number("intrusion_sigma_db", env.intrusion_sigma_db);
    number("resolution_db", env.resolution_db);
    env.validate();
    return env;
}

json fusion_net_to_json(const FusionNet& net) {
    json j;
    j["layout_version"] = 1;
    j["p"] = net.paths;
    j["K"] = net.num_classes;
    j["d_fused"] = net.d_fused;
    j["seed"] = net.seed;
    json branches = json::array();
    for (const auto& b : net.params.branches)
        branches.push_back({{"conv1_w", matrix_to_json(b.conv1_w)},
                            {"conv1_b", vector_to_json(b.conv1_b)},
                            {"conv2_w", matrix_to_json(b.conv2_w)},
                            {"conv2_b", vector_to_json(b.conv2_b)}});
    j["branches"] = std::move(branches);
    j["fuse_w"] = matrix_to_json(net.params.fuse_w);
    j["fuse_b"] = vector_to_json(net.params.fuse_b);
    j["out_w"] = matrix_to_json(net.params.out_w);
    j["out_b"] = vector_to_json(net.params.out_b);
    return j;
}

FusionNet fusion_net_from_json(const json& j) {
    if (j.at("layout_version").get<int>() != 1) throw std::invalid_argument("fusion model: unsupported layout_version");
    FusionNet net;
    net.paths = j.at("p").get<int>();
    net.num_classes = j.at("K").get<int>();
    net.d_fused = j.at("d_fused").get<int>();
    net.seed = j.at("seed").get<std::uint64_t>();
    net.params = FusionParams::zeros(net.d_fused, net.num_classes);
    const auto& branches = j.at("branches");
    if (branches.size() != kBranches) throw std::invalid_argument("fusion model: expected 8 branches");
    for (std::size_t b = 0; b < kBranches; ++b) {
        auto& bp = net.params.branches[b];
        fill_fixed(bp.conv1_w, branches[b].at("conv1_w"), "fusion model conv1_w");
        bp.conv1_b = vector_from_json(branches[b].at("conv1_b"));
        fill_fixed(bp.conv2_w, branches[b].at("conv2_w"), "fusion model conv2_w");
        bp.conv2_b = vector_from_json(branches[b].at("conv2_b"));
    }
    fill_fixed(net.params.fuse_w, j.at("fuse_w"), "fusion model fuse_w");
    net.params.fuse_b = vector_from_json(j.at("fuse_b"));
    fill_fixed(net.params.out_w, j.at("out_w"), "fusion model out_w");
    net.params.out_b = vector_from_json(j.at("out_b"));
    if (net.params.fuse_b.size() != net.d_fused || net.params.out_b.size() != net.num_classes)
        throw std::invalid_argument("fusion model: bias length mismatch");
    return net;
}

json multi_kernel_to_json(const MultiKernel& mk) {
    json kernels = json::array();
    for (const auto& k : mk.kernels) kernels.push_back({{"kind", std::string(to_string(k.kind))}, {"gamma", k.gamma}});
    return {{"kernels", kernels}, {"weights", mk.weights}};
}

std::string kernel_config_hash(const MultiKernel& mk) {
    // FNV-1a over the canonical JSON text.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : multi_kernel_to_json(mk).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json transfer_model_to_json(const TransferModel& model, const MultiKernel& mk) {
    return {{"lambda", model.lambda},
            {"d_sub", model.d_sub},
            {"n_s", model.n_s},
            {"n_t", model.n_t},
            {"kernel_config_hash", kernel_config_hash(mk)},
            {"kernel_config", multi_kernel_to_json(mk)},
            {"eigenvalues", vector_to_json(model.eigenvalues)},
            {"W", matrix_to_json(model.W)}};
}

TransferModel transfer_model_from_json(const json& j) {
    TransferModel m;
    m.lambda = j.at("lambda").get<double>();
    m.d_sub = j.at("d_sub").get<int>();
    m.n_s = j.at("n_s").get<Eigen::Index>();
    m.n_t = j.at("n_t").get<Eigen::Index>();
    m.eigenvalues = vector_from_json(j.at("eigenvalues"));
    m.W = matrix_from_json(j.at("W"), "transfer model W");
    if (m.W.rows() != m.n_s + m.n_t || m.W.cols() != m.d_sub)
        throw std::invalid_argument("transfer model: W shape does not match n_s + n_t and d_sub");
    return m;
}

json knn_to_json(const KnnModel& model) {
    return {{"type", "knn"}, {"k", model.k}, {"train_labels", model.train_labels},
            {"train_points", matrix_to_json(model.train_points)}};
}

KnnModel knn_from_json(const json& j) {
    const Eigen::MatrixXd pts = matrix_from_json(j.at("train_points"), "knn train_points");
    const auto labels = j.at("train_labels").get<std::vector<int>>();
    return knn_fit(pts, labels, j.at("k").get<int>());
}

json svm_to_json(const LinearSvmModel& model) {
    return {{"type", "linear_svm"},
            {"reg_strength", model.config.reg_strength},
            {"epochs", model.config.epochs},
            {"learning_rate", model.config.learning_rate},
            {"seed", model.config.seed},
            {"weights", matrix_to_json(model.weights)},
            {"biases", vector_to_json(model.biases)}};
}

LinearSvmModel svm_from_json(const json& j) {
    LinearSvmModel m;
    m.config.reg_strength = j.at("reg_strength").get<double>();
    m.config.epochs = j.at("epochs").get<int>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.weights = matrix_from_json(j.at("weights"), "svm weights");
    m.biases = vector_from_json(j.at("biases"));
    return m;
}

json metrics_to_json(const Metrics& m) {
    std::vector<bool> support = m.row_support;
    return {{"fp", optional_number(m.fp)},
            {"fn", optional_number(m.fn)},
            {"da", m.da},
            {"confusion", matrix_to_json(m.confusion)},
            {"row_support", support}};
}

json report_to_json(const DetectionReport& report) {
    json j;
    j["num_states"] = report.num_states;
    j["iterations_run"] = report.iterations_run;
    j["converged"] = report.converged;
    j["d_sub"] = report.model.d_sub;
    j["lambda"] = report.model.lambda;
    if (report.result) {
        j["fp"] = optional_number(report.result->fp);
        j["fn"] = optional_number(report.result->fn);
        j["da"] = report.result->da;
        j["confusion"] = matrix_to_json(report.result->confusion);
        j["row_support"] = report.result->row_support;
    } else {
        j["fp"] = nullptr;
        j["fn"] = nullptr;
        j["da"] = nullptr;
        j["confusion"] = nullptr;
    }
    j["baseline"] = report.baseline ? metrics_to_json(*report.baseline) : json(nullptr);
    json iters = json::array();
    for (const auto& it : report.per_iteration)
        iters.push_back({{"mixed_mmd_total", it.mixed_mmd_total},
                         {"label_change_fraction", it.label_change_fraction},
                         {"d_sub", it.d_sub},
                         {"da", optional_number(it.da)}});
    j["per_iteration"] = std::move(iters);
    j["selected_eigenvalues"] = vector_to_json(report.model.eigenvalues);
    j["initial_labels"] = report.initial_labels;
    j["final_labels"] = report.final_labels;
    return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": invalid JSON: " + e.what());
    }
}

}  // namespace rss_sentinel::io
