#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "hatedet/cloud.hpp"

namespace hatedet::testing {

/// Records every request and answers from a queue of canned responses.
class FakeTransport final : public HttpTransport {
public:
    struct Request {
        std::string method;
        std::string path;
        std::string body;
        std::string content_type;
        HttpHeaders headers;
    };

    void enqueue(int status, std::string body) { responses_.push_back({status, std::move(body)}); }

    HttpResponse post(const std::string& path, const std::string& body, const std::string& content_type,
                      const HttpHeaders& headers) override {
        requests.push_back({"POST", path, body, content_type, headers});
        return next();
    }

    HttpResponse get(const std::string& path, const HttpHeaders& headers) override {
        requests.push_back({"GET", path, "", "", headers});
        return next();
    }

    std::vector<Request> requests;

private:
    HttpResponse next() {
        if (responses_.empty()) return {500, "no canned response"};
        HttpResponse r = responses_.front();
        responses_.pop_front();
        return r;
    }

    std::deque<HttpResponse> responses_;
};

}  // namespace hatedet::testing
