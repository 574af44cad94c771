#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "hatedet/cloud.hpp"
#include "hatedet/errors.hpp"

namespace hatedet {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) : client_(base_url) {
        client_.set_connection_timeout(timeout);
        client_.set_read_timeout(timeout);
        client_.set_write_timeout(timeout);
    }

    HttpResponse post(const std::string& path, const std::string& body, const std::string& content_type,
                      const HttpHeaders& headers) override {
        std::lock_guard lock(mutex_);
        return convert(client_.Post(path, to_headers(headers), body, content_type), path);
    }

    HttpResponse get(const std::string& path, const HttpHeaders& headers) override {
        std::lock_guard lock(mutex_);
        return convert(client_.Get(path, to_headers(headers)), path);
    }

private:
    static httplib::Headers to_headers(const HttpHeaders& h) { return {h.begin(), h.end()}; }

    static HttpResponse convert(const httplib::Result& res, const std::string& path) {
        if (!res) throw ProviderError("HTTP request to " + path + " failed: " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }

    std::mutex mutex_;
    httplib::Client client_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout) {
    return std::make_unique<HttplibTransport>(base_url, timeout);
}

}  // namespace hatedet
