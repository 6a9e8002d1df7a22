import numpy as np
def moving_average(series, window):
    out = []
    for i in range(len(series) - window + 1):
        out.append(sum(series[i:i + window]) / window)
    return out
windows = {'short': 3, 'medium': 7, 'long': 14}
signal = list(np.sin(np.linspace(start=0.0, stop=6.28, num=50)))
smoothed = moving_average(signal, windows['medium'])
peak = max(smoothed)
