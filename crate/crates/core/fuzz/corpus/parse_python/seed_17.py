import numpy as np
import pandas as pd
scores = pd.Series([0.131, 0.127, 0.124, 0.122, 0.121])
thresholds = {'good': 0.125, 'great': 0.122}
labels = []
for s in scores:
    if s <= thresholds['great']:
        labels.append('great')
    elif s <= thresholds['good']:
        labels.append('good')
    else:
        labels.append('ok')
spread = np.percentile(scores, q=90, method='linear')
