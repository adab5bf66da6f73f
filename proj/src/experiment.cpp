#include "strefine/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "strefine/video_io.hpp"

namespace strefine {

EncoderConfig ExperimentConfig::encoder_config(Engine engine, double input_fps) const
{
    EncoderConfig ec;
    ec.block_size = block_size;
    ec.search_range = search_range;
    ec.fps = fps > 0.0 ? fps : input_fps;
    ec.refinement.engine = engine;
    ec.refinement.mu = mu;
    ec.refinement.rho_hat = rho_hat;
    ec.refinement.fsa = {fsa_iterations, 1.0, 1, 0.0};
    ec.refinement.ba = {ba_iterations, 1.0, 1, 0.0};
    ec.refinement.rba = {rba_iterations, tau, cap, 0.0};
    return ec;
}

void ExperimentConfig::validate() const
{
    if (engines.empty())
        throw std::invalid_argument("config: no engines selected");
    if (qsteps.empty())
        throw std::invalid_argument("config: empty qstep ladder");
    for (double q : qsteps)
        if (!(q > 0.0))
            throw std::invalid_argument("config: qsteps must be positive");
    if (block_size <= 0)
        throw std::invalid_argument("config: block_size must be positive");
    if (search_range < 0)
        throw std::invalid_argument("config: search_range must be non-negative");
    if (frames < 1)
        throw std::invalid_argument("config: frames must be at least 1");
    if (fps < 0.0)
        throw std::invalid_argument("config: fps must be non-negative");
    if (jobs < 1)
        throw std::invalid_argument("config: jobs must be at least 1");
    if (!(mu > 0.0 && mu <= 1.0))
        throw std::invalid_argument("config: mu must lie in (0, 1]");
    if (!(rho_hat > 0.0 && rho_hat < 1.0))
        throw std::invalid_argument("config: rho_hat must lie in (0, 1)");
    EngineConfig{fsa_iterations, 1.0, 1, 0.0}.validate();
    EngineConfig{ba_iterations, 1.0, 1, 0.0}.validate();
    EngineConfig{rba_iterations, tau, cap, 0.0}.validate();
}

// ---------------------------------------------------------------------------
// Config text

namespace {

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& key)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("config: '" + key + "' expects a number, got '" + s + "'");
    return v;
}

int parse_int(const std::string& s, const std::string& key)
{
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + s + "'");
    return v;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F fmt)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += ',';
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c)
{
    std::ostringstream out;
    out << "input = " << c.input << '\n'
        << "width = " << c.width << '\n'
        << "height = " << c.height << '\n'
        << "engines = " << join(c.engines, [](Engine e) { return std::string(engine_name(e)); }) << '\n'
        << "qsteps = " << join(c.qsteps, format_double) << '\n'
        << "block_size = " << c.block_size << '\n'
        << "search_range = " << c.search_range << '\n'
        << "mu = " << format_double(c.mu) << '\n'
        << "rho_hat = " << format_double(c.rho_hat) << '\n'
        << "tau = " << format_double(c.tau) << '\n'
        << "fsa_iterations = " << c.fsa_iterations << '\n'
        << "ba_iterations = " << c.ba_iterations << '\n'
        << "rba_iterations = " << c.rba_iterations << '\n'
        << "cap = " << c.cap << '\n'
        << "frames = " << c.frames << '\n'
        << "fps = " << format_double(c.fps) << '\n'
        << "jobs = " << c.jobs << '\n'
        << "out_dir = " << c.out_dir << '\n';
    return out.str();
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig c;
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
        {"input", [&](const std::string& v, const std::string&) { c.input = v; }},
        {"width", [&](const std::string& v, const std::string& k) { c.width = parse_int(v, k); }},
        {"height", [&](const std::string& v, const std::string& k) { c.height = parse_int(v, k); }},
        {"engines",
         [&](const std::string& v, const std::string&) {
             c.engines.clear();
             for (const auto& name : split(v, ','))
                 c.engines.push_back(parse_engine(name));
         }},
        {"qsteps",
         [&](const std::string& v, const std::string& k) {
             c.qsteps.clear();
             for (const auto& q : split(v, ','))
                 c.qsteps.push_back(parse_double(q, k));
         }},
        {"block_size", [&](const std::string& v, const std::string& k) { c.block_size = parse_int(v, k); }},
        {"search_range", [&](const std::string& v, const std::string& k) { c.search_range = parse_int(v, k); }},
        {"mu", [&](const std::string& v, const std::string& k) { c.mu = parse_double(v, k); }},
        {"rho_hat", [&](const std::string& v, const std::string& k) { c.rho_hat = parse_double(v, k); }},
        {"tau", [&](const std::string& v, const std::string& k) { c.tau = parse_double(v, k); }},
        {"fsa_iterations", [&](const std::string& v, const std::string& k) { c.fsa_iterations = parse_int(v, k); }},
        {"ba_iterations", [&](const std::string& v, const std::string& k) { c.ba_iterations = parse_int(v, k); }},
        {"rba_iterations", [&](const std::string& v, const std::string& k) { c.rba_iterations = parse_int(v, k); }},
        {"cap", [&](const std::string& v, const std::string& k) { c.cap = parse_int(v, k); }},
        {"frames", [&](const std::string& v, const std::string& k) { c.frames = parse_int(v, k); }},
        {"fps", [&](const std::string& v, const std::string& k) { c.fps = parse_double(v, k); }},
        {"jobs", [&](const std::string& v, const std::string& k) { c.jobs = parse_int(v, k); }},
        {"out_dir", [&](const std::string& v, const std::string&) { c.out_dir = v; }},
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(value, key);
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

constexpr const char* kRdHeader = "engine,qstep,rate_kbps,psnr_db";
constexpr const char* kTimingHeader = "engine,qstep,frame,refine_ms";
constexpr const char* kBdHeader = "engine,base,bd_rate_reduction_pct,bd_psnr_gain_db";

std::string rd_row(const std::string& engine, const RDPoint& p)
{
    return engine + ',' + format_double(p.qstep) + ',' + fixed(p.rate_kbps) + ',' + fixed(p.psnr_db);
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace

std::string format_rd_csv(const RDCurve& curve)
{
    std::string out = std::string(kRdHeader) + '\n';
    for (const RDPoint& p : curve.points)
        out += rd_row(curve.engine, p) + '\n';
    return out;
}

std::map<std::string, RDCurve> read_rd_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != kRdHeader)
        throw std::invalid_argument("'" + path.string() + "': expected header '" + kRdHeader + "'");
    std::map<std::string, RDCurve> curves;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty())
            continue;
        if (line[0] == '#') {
            if (line.rfind("#FAILED", 0) == 0)
                throw std::invalid_argument("'" + path.string() + "' holds results of a failed run");
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 4)
            throw std::invalid_argument("'" + path.string() + "' line " + std::to_string(lineno) +
                                        ": expected 4 columns");
        RDCurve& c = curves[cols[0]];
        c.engine = cols[0];
        c.points.push_back({parse_double(cols[1], "qstep"), parse_double(cols[2], "rate_kbps"),
                            parse_double(cols[3], "psnr_db")});
    }
    return curves;
}

std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& csv, const std::filesystem::path& out_dir)
{
    const auto curves = read_rd_csv(csv);
    const std::filesystem::path dir = out_dir.empty() ? csv.parent_path() : out_dir;
    std::vector<std::filesystem::path> written;
    for (const auto& [engine, curve] : curves) {
        std::vector<RDPoint> pts = curve.points;
        std::stable_sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) { return a.rate_kbps < b.rate_kbps; });
        std::string text = "# rate_kbps psnr_db qstep\n";
        for (const RDPoint& p : pts)
            text += fixed(p.rate_kbps) + ' ' + fixed(p.psnr_db) + ' ' + format_double(p.qstep) + '\n';
        const auto path = dir / (csv.stem().string() + "_" + engine + ".dat");
        write_text(path, text);
        written.push_back(path);
    }
    return written;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

struct Job {
    Engine engine;
    double qstep;
    std::optional<EncodeResult> result;
    std::string error;
};

void run_jobs(std::vector<Job>& jobs, const std::vector<LumaPlane>& frames, const ExperimentConfig& config,
              double input_fps)
{
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next == jobs.size())
                    return;
                i = next++;
            }
            Job& job = jobs[i];
            try {
                job.result = encode_frames(frames, job.qstep, config.encoder_config(job.engine, input_fps));
            } catch (const std::exception& e) {
                job.error = e.what();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(std::size_t(config.jobs), jobs.size());
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
}

}  // namespace

ExperimentOutputs run_experiment(const ExperimentConfig& config, const std::vector<LumaPlane>& frames,
                                 const std::string& sequence_name, double input_fps)
{
    config.validate();
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);

    ExperimentOutputs out;
    out.timing_csv = dir / (sequence_name + "_timing.csv");
    out.bd_csv = dir / (sequence_name + "_bd.csv");

    std::vector<Job> jobs;
    for (Engine e : config.engines)
        for (double q : config.qsteps)
            jobs.push_back({e, q, std::nullopt, {}});
    run_jobs(jobs, frames, config, input_fps);

    std::string failure;
    std::string timing = std::string(kTimingHeader) + '\n';
    std::size_t j = 0;
    for (Engine e : config.engines) {
        const std::string name(engine_name(e));
        RDCurve curve;
        curve.engine = name;
        std::string engine_failure;
        for (std::size_t qi = 0; qi < config.qsteps.size(); ++qi, ++j) {
            const Job& job = jobs[j];
            if (!job.result) {
                if (engine_failure.empty())
                    engine_failure = job.error;
                continue;
            }
            curve.points.push_back(job.result->point);
            for (std::size_t f = 0; f < job.result->stats.size(); ++f)
                timing += name + ',' + format_double(job.qstep) + ',' + std::to_string(f + 1) + ',' +
                          fixed(job.result->stats[f].refine_ms, 3) + '\n';
        }
        std::string text = format_rd_csv(curve);
        if (!engine_failure.empty()) {
            text += "#FAILED," + engine_failure + '\n';
            if (failure.empty())
                failure = name + ": " + engine_failure;
        }
        const auto path = dir / (sequence_name + "_" + name + "_rd.csv");
        write_text(path, text);
        out.rd_csvs.push_back(path);
        if (engine_failure.empty())
            out.curves[name] = curve;
    }
    if (!failure.empty())
        timing += "#FAILED," + failure + '\n';
    write_text(out.timing_csv, timing);

    std::string bd = std::string(kBdHeader) + '\n';
    const auto base = out.curves.find("none");
    if (base != out.curves.end()) {
        for (Engine e : config.engines) {
            if (e == Engine::None)
                continue;
            const auto it = out.curves.find(std::string(engine_name(e)));
            if (it == out.curves.end())
                continue;
            try {
                const BdResult r = bd_metrics(base->second, it->second);
                out.bd_rows.emplace_back(it->first, r);
                bd += it->first + ",none," + fixed(r.rate_reduction_pct) + ',' + fixed(r.psnr_gain_db) + '\n';
            } catch (const std::exception& ex) {
                if (failure.empty())
                    failure = std::string("bd ") + it->first + ": " + ex.what();
            }
        }
    }
    if (!failure.empty())
        bd += "#FAILED," + failure + '\n';
    write_text(out.bd_csv, bd);

    if (!failure.empty())
        throw std::runtime_error("experiment failed: " + failure);
    return out;
}

ExperimentOutputs run_experiment(const ExperimentConfig& config)
{
    config.validate();
    if (config.input.empty())
        throw std::invalid_argument("config: no input given");
    std::optional<int> w, h;
    if (config.width > 0)
        w = config.width;
    if (config.height > 0)
        h = config.height;
    const VideoSequence seq = read_sequence(config.input, w, h, std::size_t(config.frames) + 1);
    if (seq.frames.size() < 2)
        throw std::invalid_argument("input '" + config.input + "' has fewer than two frames");
    std::string name = std::filesystem::path(config.input).stem().string();
    if (name.empty())
        name = std::filesystem::path(config.input).filename().string();
    return run_experiment(config, luma_planes(seq), name, seq.fps());
}

}  // namespace strefine
