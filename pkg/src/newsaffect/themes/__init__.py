from .consensus import ConsensusModel, consensus_cluster, kmeans, pac_score
from .embedding import HashtagEmbedding, train_embedding
from .hashtags import (assign_macro_areas, hashtag_sentences, hashtag_stats,
                       load_merge_map, select_hashtags)
from .labelprop import (AreaClassifier, AreaLabels, lasso_gram, lasso_path,
                        propagate_labels, train_area_classifiers)

__all__ = [
    "ConsensusModel", "consensus_cluster", "kmeans", "pac_score",
    "HashtagEmbedding", "train_embedding",
    "assign_macro_areas", "hashtag_sentences", "hashtag_stats",
    "load_merge_map", "select_hashtags",
    "AreaClassifier", "AreaLabels", "lasso_gram", "lasso_path",
    "propagate_labels", "train_area_classifiers",
]
