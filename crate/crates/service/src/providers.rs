use std::sync::Arc;

use thmdx_core::enrich::http::{HttpChatProvider, HttpEmbedProvider, HttpRerankProvider};
use thmdx_core::enrich::mock::{MockChatProvider, MockEmbedProvider, MockRerankProvider};
use thmdx_core::enrich::{ChatProvider, EmbedProvider, RerankProvider};

use crate::config::{ProviderKind, ServiceConfig};

/// Provider clients selected by the configuration.
#[derive(Clone)]
pub struct Providers {
    pub chat: Arc<dyn ChatProvider>,
    pub embed: Arc<dyn EmbedProvider>,
    pub rerank: Option<Arc<dyn RerankProvider>>,
}

impl Providers {
    pub fn from_config(config: &ServiceConfig) -> Self {
        let chat_cfg = &config.chat_provider;
        let chat: Arc<dyn ChatProvider> = match chat_cfg.kind {
            ProviderKind::Mock => Arc::new(MockChatProvider),
            ProviderKind::Http => Arc::new(HttpChatProvider::new(&chat_cfg.provider_config())),
        };
        let embed_cfg = &config.embed_provider;
        let embed: Arc<dyn EmbedProvider> = match embed_cfg.kind {
            ProviderKind::Mock => Arc::new(MockEmbedProvider::new(embed_cfg.dimension)),
            ProviderKind::Http => Arc::new(HttpEmbedProvider::new(
                &embed_cfg.provider_config(),
                embed_cfg.wire.clone(),
            )),
        };
        let rerank = config
            .rerank_provider
            .as_ref()
            .map(|r| -> Arc<dyn RerankProvider> {
                match r.kind {
                    ProviderKind::Mock => Arc::new(MockRerankProvider::new()),
                    ProviderKind::Http => Arc::new(HttpRerankProvider::new(
                        &r.provider_config(),
                        r.wire.clone(),
                    )),
                }
            });
        Self {
            chat,
            embed,
            rerank,
        }
    }
}
