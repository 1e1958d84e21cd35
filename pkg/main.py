"""
Main application entry point.
Runs the salient-detector command line (generate / train / predict / eval / report / ablate).
"""

from salient_detector.cli import main


if __name__ == "__main__":
    main()
