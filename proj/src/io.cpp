#include <tlspose/io.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace tlspose
{

namespace
{
using nlohmann::json;

[[nodiscard]] const json& require(const json& node, const char* key, const std::string& where)
{
        const auto it = node.find(key);
        if (it == node.end())
        {
                throw ParseError("missing field \"" + std::string(key) + "\" in " + where);
        }
        return *it;
}

[[nodiscard]] double number(const json& node, const std::string& where)
{
        if (!node.is_number())
        {
                throw ParseError("expected a number in " + where);
        }
        return node.get<double>();
}

[[nodiscard]] Vector3d vec3(const json& node, const std::string& where)
{
        if (!node.is_array() || node.size() != 3)
        {
                throw ParseError("expected a 3-vector in " + where);
        }
        Vector3d res;
        for (int i = 0; i < 3; ++i)
        {
                res[i] = number(node[i], where);
        }
        return res;
}

[[nodiscard]] Matrix3d mat3(const json& node, const std::string& where)
{
        if (!node.is_array() || node.size() != 3)
        {
                throw ParseError("expected a 3x3 matrix in " + where);
        }
        Matrix3d res;
        for (int i = 0; i < 3; ++i)
        {
                res.row(i) = vec3(node[i], where).transpose();
        }
        return res;
}

[[nodiscard]] json to_json(const Vector3d& v)
{
        return json::array({v[0], v[1], v[2]});
}

[[nodiscard]] json to_json(const Matrix3d& m)
{
        json res = json::array();
        for (int i = 0; i < 3; ++i)
        {
                res.push_back(to_json(Vector3d(m.row(i).transpose())));
        }
        return res;
}
}

Scenario parse_scenario(const std::string& text)
{
        json doc;
        try
        {
                doc = json::parse(text);
        }
        catch (const json::exception& e)
        {
                throw ParseError(std::string("scenario document: ") + e.what());
        }

        Scenario res;
        res.a = Rotation(mat3(require(doc, "attitude", "scenario"), "attitude"));
        res.p = vec3(require(doc, "position", "scenario"), "position");

        const json& features = require(doc, "features", "scenario");
        if (!features.is_array())
        {
                throw ParseError("\"features\" must be a list");
        }
        for (std::size_t i = 0; i < features.size(); ++i)
        {
                const json& f = features[i];
                const std::string where = "feature " + std::to_string(i);
                FeatureTruth truth;
                FeatureNoise noise;
                truth.r = vec3(require(f, "r", where), where + " field r");
                truth.v = number(require(f, "v", where), where + " field v");
                if (f.contains("b") && f.contains("u"))
                {
                        truth.b = vec3(f["b"], where + " field b");
                        truth.u = number(f["u"], where + " field u");
                }
                else
                {
                        std::tie(truth.b, truth.u) =
                                complete_feature(res.a, res.p, truth.r, truth.v);
                }
                noise.r_r = mat3(require(f, "R_r", where), where + " field R_r");
                noise.r_b = mat3(require(f, "R_b", where), where + " field R_b");
                noise.r_u = number(require(f, "R_u", where), where + " field R_u");
                noise.r_v = number(require(f, "R_v", where), where + " field R_v");
                res.features.emplace_back(truth, noise);
        }
        res.validate();
        return res;
}

Scenario load_scenario(const std::string& path)
{
        std::ifstream in(path);
        if (!in)
        {
                throw ParseError("cannot open scenario file " + path);
        }
        std::ostringstream text;
        text << in.rdbuf();
        return parse_scenario(text.str());
}

std::string serialize_scenario(const Scenario& scenario)
{
        json doc;
        doc["attitude"] = to_json(scenario.a.matrix());
        doc["position"] = to_json(scenario.p);
        doc["features"] = json::array();
        for (const auto& [truth, noise] : scenario.features)
        {
                json f;
                f["r"] = to_json(truth.r);
                f["v"] = truth.v;
                f["b"] = to_json(truth.b);
                f["u"] = truth.u;
                f["R_r"] = to_json(noise.r_r);
                f["R_b"] = to_json(noise.r_b);
                f["R_u"] = noise.r_u;
                f["R_v"] = noise.r_v;
                doc["features"].push_back(std::move(f));
        }
        return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::string& path)
{
        std::ofstream out(path);
        if (!out)
        {
                throw ParseError("cannot open " + path + " for writing");
        }
        out << serialize_scenario(scenario);
}

MeasurementSet load_measurements(const std::string& path)
{
        std::ifstream in(path);
        if (!in)
        {
                throw ParseError("cannot open measurement file " + path);
        }
        json doc;
        try
        {
                doc = json::parse(in);
        }
        catch (const json::exception& e)
        {
                throw ParseError(std::string("measurement document: ") + e.what());
        }
        const json& list = require(doc, "measurements", "measurement document");
        if (!list.is_array())
        {
                throw ParseError("\"measurements\" must be a list");
        }
        MeasurementSet res;
        for (std::size_t i = 0; i < list.size(); ++i)
        {
                const std::string where = "measurement " + std::to_string(i);
                const json& m = list[i];
                res.r.push_back(vec3(require(m, "r", where), where + " field r"));
                res.b.push_back(vec3(require(m, "b", where), where + " field b"));
                res.u.push_back(number(require(m, "u", where), where + " field u"));
                res.v.push_back(number(require(m, "v", where), where + " field v"));
        }
        return res;
}

void save_measurements(const MeasurementSet& meas, const std::string& path)
{
        json doc;
        doc["measurements"] = json::array();
        for (std::size_t i = 0; i < meas.size(); ++i)
        {
                json m;
                m["r"] = to_json(meas.r[i]);
                m["b"] = to_json(meas.b[i]);
                m["u"] = meas.u[i];
                m["v"] = meas.v[i];
                doc["measurements"].push_back(std::move(m));
        }
        std::ofstream out(path);
        if (!out)
        {
                throw ParseError("cannot open " + path + " for writing");
        }
        out << doc.dump(2) << "\n";
}

std::string format_double(const double x)
{
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return buf;
}

}
